#include "autofocal/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace autofocal::data {

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "imbalanced-blobs") return DatasetKind::ImbalancedBlobs;
  if (name == "multilabel-synthetic") return DatasetKind::MultilabelSynthetic;
  if (name == "noisy-regression") return DatasetKind::NoisyRegression;
  if (name == "csv-file") return DatasetKind::CsvFile;
  throw std::invalid_argument("unknown dataset kind '" + name + "'");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::ImbalancedBlobs: return "imbalanced-blobs";
    case DatasetKind::MultilabelSynthetic: return "multilabel-synthetic";
    case DatasetKind::NoisyRegression: return "noisy-regression";
    case DatasetKind::CsvFile: return "csv-file";
  }
  return "imbalanced-blobs";
}

void DatasetSpec::validate() const {
  if (kind == DatasetKind::CsvFile) {
    if (csv_path.empty()) throw std::invalid_argument("dataset: csv-file needs a path");
  } else {
    if (samples <= 0 || features <= 0) throw std::invalid_argument("dataset: counts must be positive");
    if (kind != DatasetKind::NoisyRegression && classes <= 0) {
      throw std::invalid_argument("dataset: class count must be positive");
    }
    if (kind == DatasetKind::ImbalancedBlobs && classes < 2) {
      throw std::invalid_argument("dataset: imbalanced-blobs needs at least two classes");
    }
    if (kind == DatasetKind::NoisyRegression && targets <= 0) {
      throw std::invalid_argument("dataset: target count must be positive");
    }
  }
  if (!(imbalance_ratio >= 1.0)) throw std::invalid_argument("dataset: imbalance ratio must be >= 1");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) {
    throw std::invalid_argument("dataset: outlier fraction must lie in [0, 1)");
  }
  if (!(label_noise >= 0.0)) throw std::invalid_argument("dataset: label noise must be >= 0");
  if (auxiliary_targets < 0) throw std::invalid_argument("dataset: auxiliary target count must be >= 0");
  if (!(validation_fraction >= 0.0 && test_fraction >= 0.0 && validation_fraction + test_fraction < 1.0)) {
    throw std::invalid_argument("dataset: split fractions must be >= 0 and leave room for training data");
  }
}

Sample Dataset::sample(Eigen::Index i) const {
  Sample s;
  s.features = features.row(i).transpose();
  if (has_classes()) s.class_index = classes(i);
  if (has_mask()) s.mask = mask.row(i).transpose();
  if (has_targets()) s.targets = targets.row(i).transpose();
  return s;
}

namespace {

template <typename MatrixT>
MatrixT take_rows(const MatrixT& m, const std::vector<Eigen::Index>& rows) {
  if (m.size() == 0) return m;
  MatrixT out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

Eigen::VectorXd random_direction(std::mt19937_64& rng, int dims) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dims);
  do {
    for (int d = 0; d < dims; ++d) v(d) = normal(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

/// Fixed random ground-truth mapping from features to targets.
struct TargetFunction {
  Eigen::MatrixXd weights;  // features x targets
  Eigen::VectorXd offsets;
  GroundTruth kind = GroundTruth::Affine;

  TargetFunction(std::mt19937_64& rng, int features, int targets, GroundTruth kind_) : kind(kind_) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    weights.resize(features, targets);
    offsets.resize(targets);
    const double scale = kind == GroundTruth::Sinusoidal ? 2.0 : 1.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
      weights(k) = scale * normal(rng) / std::sqrt(static_cast<double>(features));
    }
    for (int t = 0; t < targets; ++t) offsets(t) = uniform(rng);
  }

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd z = x * weights;
    z.rowwise() += offsets.transpose();
    if (kind == GroundTruth::Sinusoidal) z = z.array().sin().matrix();
    return z;
  }
};

void attach_targets(Dataset& ds, const DatasetSpec& spec, std::mt19937_64& rng, int targets) {
  TargetFunction f(rng, static_cast<int>(ds.features.cols()), targets, spec.ground_truth);
  ds.clean_targets = f(ds.features);
  ds.targets = ds.clean_targets;
  if (spec.label_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.label_noise);
    for (Eigen::Index k = 0; k < ds.targets.size(); ++k) ds.targets(k) += noise(rng);
  }
  ds.outliers = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(ds.targets.rows(), ds.targets.cols(),
                                                                               false);
  const auto corrupted = static_cast<Eigen::Index>(std::llround(spec.outlier_fraction * double(ds.targets.size())));
  if (corrupted > 0) {
    std::vector<Eigen::Index> elements(static_cast<std::size_t>(ds.targets.size()));
    std::iota(elements.begin(), elements.end(), Eigen::Index{0});
    std::shuffle(elements.begin(), elements.end(), rng);
    std::bernoulli_distribution coin(0.5);
    for (Eigen::Index k = 0; k < corrupted; ++k) {
      const Eigen::Index e = elements[static_cast<std::size_t>(k)];
      const double sign = spec.outlier_sign == OutlierSign::Positive || coin(rng) ? 1.0 : -1.0;
      ds.targets(e) += sign * spec.outlier_magnitude;
      ds.outliers(e) = true;
    }
  }
}

Dataset shuffled(const Dataset& ds, std::mt19937_64& rng) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  return ds.subset(order);
}

Dataset make_blobs(const DatasetSpec& spec, std::mt19937_64& rng) {
  const int k = spec.classes;
  const auto minority = static_cast<long>(std::llround(spec.samples / (spec.imbalance_ratio + (k - 1))));
  if (minority <= 0) throw std::invalid_argument("dataset: minority class count rounds to zero");
  const long majority = spec.samples - minority * (k - 1);
  if (majority <= 0) throw std::invalid_argument("dataset: majority class count is not positive");

  std::vector<Eigen::VectorXd> centres;
  const Eigen::VectorXd first = random_direction(rng, spec.features);
  for (int c = 0; c < k; ++c) {
    if (k == 2) {
      centres.push_back((c == 0 ? 0.5 : -0.5) * spec.separation * first);
    } else {
      centres.push_back(0.5 * spec.separation * (c == 0 ? first : random_direction(rng, spec.features)));
    }
  }

  Dataset ds;
  ds.class_count = k;
  ds.features.resize(spec.samples, spec.features);
  ds.classes.resize(spec.samples);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Index row = 0;
  for (int c = 0; c < k; ++c) {
    const long count = c == 0 ? majority : minority;
    for (long i = 0; i < count; ++i, ++row) {
      for (int d = 0; d < spec.features; ++d) ds.features(row, d) = centres[c](d) + normal(rng);
      ds.classes(row) = c;
    }
  }
  if (spec.auxiliary_targets > 0) attach_targets(ds, spec, rng, spec.auxiliary_targets);
  return shuffled(ds, rng);
}

Dataset make_multilabel(const DatasetSpec& spec, std::mt19937_64& rng) {
  const int k = spec.classes;
  const auto positives = static_cast<long>(std::llround(spec.samples / (spec.imbalance_ratio + 1.0)));
  if (positives <= 0) throw std::invalid_argument("dataset: positive example count rounds to zero");

  std::vector<Eigen::VectorXd> centres;
  for (int c = 0; c < k; ++c) centres.push_back(spec.separation * random_direction(rng, spec.features));

  Dataset ds;
  ds.class_count = k;
  ds.features.resize(spec.samples, spec.features);
  ds.mask = Eigen::MatrixXd::Zero(spec.samples, k);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::bernoulli_distribution pair(0.3);
  for (Eigen::Index row = 0; row < spec.samples; ++row) {
    Eigen::VectorXd centre = Eigen::VectorXd::Zero(spec.features);
    if (row < positives) {
      const int a = pick(rng);
      ds.mask(row, a) = 1.0;
      centre = centres[a];
      if (k > 1 && pair(rng)) {
        int b = pick(rng);
        while (b == a) b = pick(rng);
        ds.mask(row, b) = 1.0;
        centre = 0.5 * (centres[a] + centres[b]);
      }
    }
    for (int d = 0; d < spec.features; ++d) ds.features(row, d) = centre(d) + normal(rng);
  }
  if (spec.auxiliary_targets > 0) attach_targets(ds, spec, rng, spec.auxiliary_targets);
  return shuffled(ds, rng);
}

Dataset make_regression(const DatasetSpec& spec, std::mt19937_64& rng) {
  Dataset ds;
  ds.features.resize(spec.samples, spec.features);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (Eigen::Index k = 0; k < ds.features.size(); ++k) ds.features(k) = uniform(rng);
  attach_targets(ds, spec, rng, spec.targets);
  return ds;
}

}  // namespace

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.class_count = class_count;
  out.features = take_rows(features, rows);
  if (has_classes()) {
    out.classes.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out.classes(static_cast<Eigen::Index>(k)) = classes(rows[k]);
  }
  out.mask = take_rows(mask, rows);
  out.targets = take_rows(targets, rows);
  out.clean_targets = take_rows(clean_targets, rows);
  out.outliers = take_rows(outliers, rows);
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  switch (spec.kind) {
    case DatasetKind::ImbalancedBlobs: return make_blobs(spec, rng);
    case DatasetKind::MultilabelSynthetic: return make_multilabel(spec, rng);
    case DatasetKind::NoisyRegression: return make_regression(spec, rng);
    case DatasetKind::CsvFile: return load_csv(spec.csv_path, spec.csv_schema);
  }
  throw std::invalid_argument("dataset: unknown kind");
}

Splits split(const Dataset& dataset, double validation_fraction, double test_fraction, std::uint64_t seed) {
  const Eigen::Index n = dataset.size();
  const auto n_val = static_cast<Eigen::Index>(std::llround(validation_fraction * double(n)));
  const auto n_test = static_cast<Eigen::Index>(std::llround(test_fraction * double(n)));
  if (n - n_val - n_test <= 0) throw std::invalid_argument("dataset: split leaves no training samples");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), rng);

  Splits s;
  s.validation_rows.assign(order.begin(), order.begin() + n_val);
  s.test_rows.assign(order.begin() + n_val, order.begin() + n_val + n_test);
  s.train_rows.assign(order.begin() + n_val + n_test, order.end());
  s.train = dataset.subset(s.train_rows);
  s.validation = dataset.subset(s.validation_rows);
  s.test = dataset.subset(s.test_rows);
  return s;
}

Splits generate(const DatasetSpec& spec) {
  return split(generate_dataset(spec), spec.validation_fraction, spec.test_fraction, spec.seed);
}

CsvError::CsvError(const std::string& message, std::size_t row, std::size_t column)
    : std::runtime_error(message + (row ? " (row " + std::to_string(row) + (column ? ", column " + std::to_string(column) : "") + ")" : "")),
      row_(row),
      column_(column) {}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw CsvError("csv: missing column '" + name + "'", 1, 0);
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

CsvTable parse_csv_table(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw CsvError("csv: expected " + std::to_string(table.header.size()) + " cells, found " +
                         std::to_string(cells.size()),
                     row, 0);
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw CsvError("csv: file is empty", 0, 0);
  return table;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("csv: cannot open " + path, 0, 0);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_csv_table(text.str());
}

std::string format_double(double value) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

double parse_double(const std::string& cell, std::size_t row, std::size_t column) {
  double v = 0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw CsvError("csv: cannot parse '" + cell + "' as a number", row, column);
  }
  return v;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  const CsvTable table = read_csv_table(path);
  if (table.rows.empty()) throw CsvError("csv: " + path + " has no data rows", 0, 0);
  const int roles = int(schema.class_column.has_value()) + int(!schema.mask_columns.empty()) +
                    int(!schema.target_columns.empty());
  if (roles != 1) throw std::invalid_argument("csv schema: exactly one label role (class, mask or targets) required");

  std::vector<std::size_t> label_cols;
  if (schema.class_column) label_cols.push_back(table.column(*schema.class_column));
  for (const auto& name : schema.mask_columns) label_cols.push_back(table.column(name));
  for (const auto& name : schema.target_columns) label_cols.push_back(table.column(name));

  std::vector<std::size_t> feature_cols;
  if (schema.feature_columns.empty()) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (std::find(label_cols.begin(), label_cols.end(), c) == label_cols.end()) feature_cols.push_back(c);
    }
  } else {
    for (const auto& name : schema.feature_columns) feature_cols.push_back(table.column(name));
  }
  if (feature_cols.empty()) throw std::invalid_argument("csv schema: no feature columns");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Dataset ds;
  ds.features.resize(n, static_cast<Eigen::Index>(feature_cols.size()));
  Eigen::MatrixXd labels(n, static_cast<Eigen::Index>(label_cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const std::size_t line = static_cast<std::size_t>(i) + 2;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      ds.features(i, static_cast<Eigen::Index>(f)) = parse_double(row[feature_cols[f]], line, feature_cols[f] + 1);
    }
    for (std::size_t l = 0; l < label_cols.size(); ++l) {
      labels(i, static_cast<Eigen::Index>(l)) = parse_double(row[label_cols[l]], line, label_cols[l] + 1);
    }
  }

  if (schema.class_column) {
    ds.classes.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = labels(i, 0);
      if (v < 0 || v != std::floor(v)) {
        throw CsvError("csv: class label must be a non-negative integer", static_cast<std::size_t>(i) + 2,
                       label_cols[0] + 1);
      }
      ds.classes(i) = static_cast<int>(v);
    }
    ds.class_count = ds.classes.maxCoeff() + 1;
  } else if (!schema.mask_columns.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < labels.cols(); ++c) {
        if (labels(i, c) != 0.0 && labels(i, c) != 1.0) {
          throw CsvError("csv: mask entries must be 0 or 1", static_cast<std::size_t>(i) + 2,
                         label_cols[static_cast<std::size_t>(c)] + 1);
        }
      }
    }
    ds.mask = labels;
    ds.class_count = static_cast<int>(labels.cols());
  } else {
    ds.targets = labels;
    ds.clean_targets = labels;
    ds.outliers = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, labels.cols(), false);
  }
  return ds;
}

CsvSchema export_schema(const Dataset& dataset) {
  CsvSchema schema;
  for (Eigen::Index d = 0; d < dataset.features.cols(); ++d) schema.feature_columns.push_back("x" + std::to_string(d));
  if (dataset.has_classes()) schema.class_column = "class";
  for (Eigen::Index c = 0; c < dataset.mask.cols(); ++c) schema.mask_columns.push_back("m" + std::to_string(c));
  if (!dataset.has_classes() && !dataset.has_mask()) {
    for (Eigen::Index t = 0; t < dataset.targets.cols(); ++t) schema.target_columns.push_back("t" + std::to_string(t));
  }
  return schema;
}

void export_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("csv: cannot write " + path);
  std::vector<std::string> header;
  for (Eigen::Index d = 0; d < dataset.features.cols(); ++d) header.push_back("x" + std::to_string(d));
  if (dataset.has_classes()) header.emplace_back("class");
  for (Eigen::Index c = 0; c < dataset.mask.cols(); ++c) header.push_back("m" + std::to_string(c));
  for (Eigen::Index t = 0; t < dataset.targets.cols(); ++t) header.push_back("t" + std::to_string(t));
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    bool first = true;
    auto cell = [&](const std::string& s) {
      out << (first ? "" : ",") << s;
      first = false;
    };
    for (Eigen::Index d = 0; d < dataset.features.cols(); ++d) cell(format_double(dataset.features(i, d)));
    if (dataset.has_classes()) cell(std::to_string(dataset.classes(i)));
    for (Eigen::Index c = 0; c < dataset.mask.cols(); ++c) cell(format_double(dataset.mask(i, c)));
    for (Eigen::Index t = 0; t < dataset.targets.cols(); ++t) cell(format_double(dataset.targets(i, t)));
    out << '\n';
  }
  if (!out) throw std::runtime_error("csv: write failed for " + path);
}

}  // namespace autofocal::data
