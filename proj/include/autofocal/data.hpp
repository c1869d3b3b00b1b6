#pragma once

// Synthetic desk-scale datasets with controllable imbalance and label noise,
// and a small CSV reader/writer for tabular data.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace autofocal::data {

enum class DatasetKind { ImbalancedBlobs, MultilabelSynthetic, NoisyRegression, CsvFile };

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);

enum class GroundTruth { Affine, Sinusoidal };
enum class OutlierSign { Symmetric, Positive };

/// Column roles of a CSV file. Exactly one of class_column, mask_columns or
/// target_columns must be set. An empty feature list takes every column that
/// has no label role.
struct CsvSchema {
  std::vector<std::string> feature_columns;
  std::optional<std::string> class_column;
  std::vector<std::string> mask_columns;
  std::vector<std::string> target_columns;
};

struct DatasetSpec {
  DatasetKind kind = DatasetKind::ImbalancedBlobs;
  int samples = 10100;
  int features = 2;
  /// Class count for classification kinds, target count for regression.
  int classes = 2;
  int targets = 1;
  /// majority : minority (blobs) or negative : positive examples (multilabel).
  double imbalance_ratio = 1.0;
  /// Centre spread in units of the blob std: blob centres sit separation / 2
  /// from the origin, multilabel class centres at separation.
  double separation = 3.0;
  /// Regression targets attached to classification samples (0 = none).
  int auxiliary_targets = 0;
  GroundTruth ground_truth = GroundTruth::Affine;
  double label_noise = 0.1;  // sigma_true, task units
  double outlier_fraction = 0.0;
  double outlier_magnitude = 10.0;
  OutlierSign outlier_sign = OutlierSign::Symmetric;
  double validation_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 1;
  std::string csv_path;
  CsvSchema csv_schema;

  void validate() const;
};

/// One row of a dataset in label-agnostic form.
struct Sample {
  Eigen::VectorXd features;
  std::optional<int> class_index;
  Eigen::VectorXd mask;     // empty unless multi-target
  Eigen::VectorXd targets;  // empty unless regression
};

/// Column-major storage of a dataset; label members are empty when absent.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXi classes;       // single-target class indices
  int class_count = 0;
  Eigen::MatrixXd mask;          // multi-target binary labels
  Eigen::MatrixXd targets;       // regression labels (noisy)
  Eigen::MatrixXd clean_targets; // regression ground truth
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> outliers;  // per target element

  Eigen::Index size() const { return features.rows(); }
  bool has_classes() const { return classes.size() > 0; }
  bool has_mask() const { return mask.size() > 0; }
  bool has_targets() const { return targets.size() > 0; }
  Sample sample(Eigen::Index i) const;
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct Splits {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> validation_rows;
  std::vector<Eigen::Index> test_rows;
};

/// Full dataset before splitting; deterministic in spec.seed.
Dataset generate_dataset(const DatasetSpec& spec);

/// Generates (or loads, for csv-file) and splits into disjoint train,
/// validation and test parts using a seeded permutation.
Splits generate(const DatasetSpec& spec);

Splits split(const Dataset& dataset, double validation_fraction, double test_fraction, std::uint64_t seed);

/// Raised for malformed CSV input; row and column are 1-based, 0 when unknown.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& message, std::size_t row, std::size_t column);
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Header plus string cells; every row has as many cells as the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv_table(const std::string& path);
CsvTable parse_csv_table(const std::string& text);

Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes features as x0.., then `class`, m0.. or t0.. label columns, with 17
/// significant digits so load_csv reproduces every value.
void export_csv(const Dataset& dataset, const std::string& path);

/// Schema matching the columns export_csv writes for this dataset.
CsvSchema export_schema(const Dataset& dataset);

std::string format_double(double value);
double parse_double(const std::string& cell, std::size_t row, std::size_t column);

}  // namespace autofocal::data
