// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "autofocal/harness.hpp"
#include "oracles.hpp"

using namespace autofocal;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(v.size()));
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double metric(const harness::RunResult& r, const std::string& name) {
  for (const auto& [n, v] : r.test_metrics) {
    if (n == name) return v;
  }
  throw std::runtime_error("missing test metric " + name);
}

harness::ExperimentConfig load_with_seed(const std::string& file, std::uint64_t seed) {
  Config c = Config::load((fs::path(AUTOFOCAL_CONFIG_DIR) / file).string());
  c.set("seed", std::to_string(seed));
  return harness::ExperimentConfig::from_config(c);
}

struct Job {
  harness::ExperimentConfig config;
  std::string dir;
};

/// Trains every job on a small pool of threads; results keep the job order.
std::vector<harness::RunResult> run_all(const std::vector<Job>& jobs) {
  std::vector<std::optional<harness::RunResult>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), unsigned(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          results[i] = harness::run(jobs[i].config, jobs[i].dir);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<harness::RunResult> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// 1-3, 5: closed forms and identities

Verdict quantile_round_trip() {
  double worst = 0;
  for (int i = 1; i <= 19; ++i) {
    const double p_hat = 0.05 * i;
    for (double h : {0.3, 0.5, 0.7, 0.9}) {
      const double gamma = gamma_quantile(p_hat, h, std::numeric_limits<double>::infinity());
      const auto w = [gamma](double p) { return std::pow(1.0 - p, gamma); };
      const double ratio = oracle::integrate(w, 0.0, p_hat) / oracle::integrate(w, 0.0, 1.0);
      worst = std::max(worst, std::abs(ratio - (h * p_hat + (1.0 - h))));
    }
  }
  return {worst <= 1e-6, "max |ratio - k| = " + fmt("%.3g", worst) + " over 76 points"};
}

Verdict information_schedule() {
  const bool at_one = gamma_info(1.0) == 0.0;
  const double at_inv_e = gamma_info(std::exp(-1.0));
  bool monotone = true;
  for (int i = 2; i <= 99; ++i) monotone = monotone && gamma_info(i / 100.0) < gamma_info((i - 1) / 100.0);
  const bool pass = at_one && std::abs(at_inv_e - 1.0) <= 1e-12 && monotone;
  return {pass, std::string("gamma(1) = 0 ") + (at_one ? "exactly" : "NOT exactly") + ", |gamma(1/e) - 1| = " +
                    fmt("%.3g", std::abs(at_inv_e - 1.0)) + ", strictly decreasing: " + (monotone ? "yes" : "no")};
}

Verdict detached_identity() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  std::uniform_real_distribution<double> g(0.0, 6.0);
  std::size_t mismatches = 0, elements = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + trial % 29, c = 2 + trial % 4;
    MatrixXd p(n, c);
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) = u(rng);
    const bool multi = trial % 2 == 1;
    ClassificationBatch<double> batch = [&] {
      if (multi) {
        MatrixXd mask(n, c);
        for (Eigen::Index k = 0; k < mask.size(); ++k) mask(k) = u(rng) < 0.3 ? 1.0 : 0.0;
        return ClassificationBatch<double>::multi_target(p, mask);
      }
      for (int i = 0; i < n; ++i) p.row(i) /= p.row(i).sum();
      VectorXi y(n);
      for (int i = 0; i < n; ++i) y(i) = static_cast<int>(rng() % static_cast<unsigned>(c));
      return ClassificationBatch<double>::single_target(p, y);
    }();
    ProgressTracker<double> tracker;
    const auto schedule = trial % 3 == 0 ? GammaSchedule<double>::fixed(g(rng))
                          : trial % 3 == 1 ? GammaSchedule<double>::info()
                                           : GammaSchedule<double>::quantile(0.7);
    const auto out = focal_classification(batch, schedule, tracker);
    const MatrixXd base = cross_entropy(batch).grad_wrt_outputs;
    for (Eigen::Index i = 0; i < base.rows(); ++i) {
      for (Eigen::Index k = 0; k < base.cols(); ++k) {
        const double w = multi ? out.per_sample_weight(i, k) : out.per_sample_weight(i, 0);
        ++elements;
        if (out.grad_wrt_outputs(i, k) != w * base(i, k)) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " bitwise mismatches in " + std::to_string(elements) +
                               " gradient elements over 100 batches"};
}

Verdict regression_probability() {
  const double pc = regression_p_correct(1.96, 1.0);
  const double reference = 2.0 * (1.0 - oracle::normal_cdf(1.96));
  double worst_scale = 0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-3.0, 3.0), s(0.05, 4.0);
  for (int k = 0; k < 200; ++k) {
    const double delta = d(rng), sigma2 = s(rng);
    const double base = regression_p_correct(delta, sigma2);
    for (double c : {0.001, 1.0, 1000.0}) {
      worst_scale = std::max(worst_scale, std::abs(regression_p_correct(c * delta, c * sigma2) - base));
    }
  }
  const bool pass = std::abs(pc - 0.04999579) <= 1e-6 && std::abs(pc - reference) <= 1e-6 && worst_scale <= 1e-12;
  return {pass, "p_correct(1.96) = " + fmt("%.10f", pc) + ", oracle " + fmt("%.10f", reference) +
                    ", max scale deviation " + fmt("%.3g", worst_scale)};
}

// ---------------------------------------------------------------------------
// 4: end-to-end gradients of network plus loss against frozen-weight differences

enum class Variant { CE, FocalSingle, FocalMulti, Alpha, L1, L2, FocalRegL2, FocalRegL1, Multiloss, WeightedSum };

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::CE: return "ce";
    case Variant::FocalSingle: return "focal";
    case Variant::FocalMulti: return "focal-multi";
    case Variant::Alpha: return "alpha";
    case Variant::L1: return "l1";
    case Variant::L2: return "l2";
    case Variant::FocalRegL2: return "focal-reg-l2";
    case Variant::FocalRegL1: return "focal-reg-l1";
    case Variant::Multiloss: return "multiloss";
    case Variant::WeightedSum: return "weighted-sum";
  }
  return "?";
}

bool uses_cls(Variant v) {
  return v == Variant::CE || v == Variant::FocalSingle || v == Variant::FocalMulti || v == Variant::Alpha ||
         v == Variant::Multiloss || v == Variant::WeightedSum;
}
bool uses_reg(Variant v) { return !uses_cls(v) || v == Variant::Multiloss || v == Variant::WeightedSum; }

/// Mean of w * (-log p_correct), written out independently of the library.
double frozen_cross_entropy(const MatrixXd& probs, const VectorXi& labels, const MatrixXd& mask, const MatrixXd& w) {
  double sum = 0;
  double count = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (labels.size() > 0) {
      sum += w(i, 0) * -std::log(probs(i, labels(i)));
      count += 1;
      continue;
    }
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      sum += w(i, c) * -std::log(mask(i, c) > 0.5 ? probs(i, c) : 1.0 - probs(i, c));
      count += 1;
    }
  }
  return sum / count;
}

double frozen_regression(const MatrixXd& pred, const MatrixXd& labels, const MatrixXd& w, bool l1) {
  double sum = 0;
  for (Eigen::Index k = 0; k < pred.size(); ++k) {
    const double d = pred(k) - labels(k);
    sum += w(k) * (l1 ? std::abs(d) : d * d);
  }
  return sum / double(pred.size());
}

double gradient_check(Variant variant, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> depth(1, 3), width(1, 32), act(0, 2);
  std::normal_distribution<double> z(0.0, 1.0);
  const nn::Activation hidden_acts[] = {nn::Activation::Relu, nn::Activation::Tanh, nn::Activation::Sigmoid};
  const int n = 8, classes = 3, targets = 2;
  const bool multi = variant == Variant::FocalMulti;

  nn::MlpSpec spec;
  spec.input_size = 4;
  for (int l = depth(rng); l > 0; --l) {
    spec.hidden.push_back(width(rng));
    spec.hidden_activations.push_back(hidden_acts[act(rng)]);
  }
  if (uses_cls(variant)) {
    spec.heads.push_back({"cls", classes, multi ? nn::Activation::Sigmoid : nn::Activation::Softmax});
  }
  if (uses_reg(variant)) spec.heads.push_back({"reg", targets, nn::Activation::Identity});
  nn::Mlp net(spec, rng());

  MatrixXd x(n, spec.input_size), reg_labels(n, targets), mask(n, classes);
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = z(rng);
  for (Eigen::Index k = 0; k < reg_labels.size(); ++k) reg_labels(k) = z(rng);
  for (Eigen::Index k = 0; k < mask.size(); ++k) mask(k) = rng() % 3 == 0 ? 1.0 : 0.0;
  VectorXi labels(n);
  for (int i = 0; i < n; ++i) labels(i) = static_cast<int>(rng() % classes);
  if (multi) labels.resize(0);

  // Learnable variances: one per regression target for focal regression, one
  // per task for multiloss.
  std::vector<TaskVariance<double>> variances;
  const bool focal_reg = variant == Variant::FocalRegL2 || variant == Variant::FocalRegL1;
  if (focal_reg) variances = {TaskVariance<double>::from_sigma2(0.7), TaskVariance<double>::from_sigma2(1.6)};
  if (variant == Variant::Multiloss) {
    variances = {TaskVariance<double>::from_sigma2(0.5), TaskVariance<double>::from_sigma2(2.0)};
  }
  const std::vector<int> groups = focal_reg ? std::vector<int>{0, 1} : std::vector<int>{};

  // Analytic gradient through the library.
  const nn::HeadOutputs& out = net.forward(x);
  nn::HeadOutputs head_grads;
  VectorXd variance_grad = VectorXd::Zero(static_cast<Eigen::Index>(variances.size()));
  MatrixXd cls_w, reg_w;
  double cls_loss = 0, reg_loss = 0;
  ProgressTracker<double> tracker(multi ? ProgressPolicy::MultiTargetAllExamples : ProgressPolicy::SingleTarget);
  tracker.observe(CorrectProbability<double>(0.35));
  if (uses_cls(variant)) {
    const auto batch = multi ? ClassificationBatch<double>::multi_target(out.at("cls"), mask)
                             : ClassificationBatch<double>::single_target(out.at("cls"), labels);
    LossOutput<double> o;
    if (variant == Variant::CE) {
      o = cross_entropy(batch);
    } else if (variant == Variant::Alpha) {
      o = alpha_balanced_classification(batch);
    } else {
      o = focal_classification(batch, GammaSchedule<double>::info(), tracker);
    }
    cls_w = o.per_sample_weight;
    cls_loss = o.total;
    head_grads["cls"] = o.grad_wrt_outputs;
  }
  if (uses_reg(variant)) {
    const RegressionBatch<double> batch(out.at("reg"), reg_labels, groups);
    LossOutput<double> o;
    if (focal_reg) {
      const FocalRegressionOptions options{variant == Variant::FocalRegL1 ? RegressionBase::L1 : RegressionBase::L2};
      o = focal_regression(batch, std::span<const TaskVariance<double>>(variances), GammaSchedule<double>::info(),
                           tracker, options);
      variance_grad = o.grad_wrt_variance;
    } else {
      o = regression_loss(batch, variant == Variant::L1 ? RegressionBase::L1 : RegressionBase::L2);
    }
    reg_w = o.per_sample_weight;
    reg_loss = o.total;
    head_grads["reg"] = o.grad_wrt_outputs;
  }
  if (variant == Variant::Multiloss) {
    const std::vector<std::pair<double, TaskVariance<double>>> tasks{{cls_loss, variances[0]},
                                                                     {reg_loss, variances[1]}};
    const auto g = multiloss_gradient(std::span<const std::pair<double, TaskVariance<double>>>(tasks));
    head_grads["cls"] *= g.d_loss(0);
    head_grads["reg"] *= g.d_loss(1);
    variance_grad = g.d_variance;
  }
  if (variant == Variant::WeightedSum) head_grads["cls"] *= 10.0;
  const VectorXd param_grad = net.backward(head_grads);
  VectorXd analytic(param_grad.size() + variance_grad.size());
  analytic << param_grad, variance_grad;

  // Frozen-weight objective over (network parameters, variance logs).
  const Eigen::Index np = net.parameter_count();
  const bool l1 = variant == Variant::L1 || variant == Variant::FocalRegL1;
  const auto objective = [&](const VectorXd& theta) {
    nn::Mlp probe = net;
    probe.set_parameters(theta.head(np));
    const auto y = probe.predict(x);
    double lc = 0, lr = 0;
    if (uses_cls(variant)) {
      const MatrixXd ones = MatrixXd::Ones(n, multi ? classes : 1);
      lc = frozen_cross_entropy(y.at("cls"), labels, mask, variant == Variant::CE ? ones : cls_w);
    }
    if (uses_reg(variant)) {
      const MatrixXd w = focal_reg ? reg_w : MatrixXd::Ones(n, targets);
      lr = frozen_regression(y.at("reg"), reg_labels, w, l1);
    }
    if (focal_reg) {
      for (Eigen::Index g = 0; g < 2; ++g) lr += std::log(1.0 + std::exp(theta(np + g)));
      return lr;
    }
    if (variant == Variant::Multiloss) {
      const double v0 = std::exp(theta(np)), v1 = std::exp(theta(np + 1));
      return lc / (2.0 * v0) + std::log(1.0 + v0) + lr / (2.0 * v1) + std::log(1.0 + v1);
    }
    if (variant == Variant::WeightedSum) return 10.0 * lc + lr;
    return lc + lr;
  };
  VectorXd theta(analytic.size());
  theta.head(np) = net.parameters();
  for (std::size_t g = 0; g < variances.size(); ++g) theta(np + static_cast<Eigen::Index>(g)) = variances[g].s;
  return oracle::relative_error(analytic, oracle::numeric_gradient(objective, theta));
}

Verdict end_to_end_gradients() {
  std::mt19937_64 rng(4);
  double worst = 0;
  std::string worst_name;
  int checks = 0;
  for (auto v : {Variant::CE, Variant::FocalSingle, Variant::FocalMulti, Variant::Alpha, Variant::L1, Variant::L2,
                 Variant::FocalRegL2, Variant::FocalRegL1, Variant::Multiloss, Variant::WeightedSum}) {
    for (int trial = 0; trial < 4; ++trial, ++checks) {
      const double e = gradient_check(v, rng);
      if (e >= worst) {
        worst = e;
        worst_name = variant_name(v);
      }
    }
  }
  return {worst < 1e-5, std::to_string(checks) + " random networks over 10 loss variants, max relative error " +
                            fmt("%.3g", worst) + " (" + worst_name + ")"};
}

// ---------------------------------------------------------------------------
// 6-10: training runs

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5};

struct ImbalanceRuns {
  std::vector<harness::RunResult> ce, focal;
};

double convergence_or_budget(const harness::RunResult& r, const harness::ExperimentConfig& c) {
  return r.convergence ? double(*r.convergence) : double(c.training.steps + c.training.eval_every);
}

Verdict imbalance(const ImbalanceRuns& runs, const harness::ExperimentConfig& ce_config) {
  std::vector<double> ce_recall, focal_recall, ce_conv, focal_conv;
  int ce_converged = 0, focal_converged = 0;
  for (std::size_t k = 0; k < kSeeds.size(); ++k) {
    ce_recall.push_back(metric(runs.ce[k], "test_minority_recall"));
    focal_recall.push_back(metric(runs.focal[k], "test_minority_recall"));
    ce_conv.push_back(convergence_or_budget(runs.ce[k], ce_config));
    focal_conv.push_back(convergence_or_budget(runs.focal[k], ce_config));
    ce_converged += runs.ce[k].convergence.has_value();
    focal_converged += runs.focal[k].convergence.has_value();
  }
  const bool recall_ok = mean(focal_recall) >= mean(ce_recall);
  const bool conv_ok = ce_converged == 0 || mean(focal_conv) <= mean(ce_conv);
  std::ostringstream d;
  d << "minority recall focal " << fmt("%.4f", mean(focal_recall)) << " vs ce " << fmt("%.4f", mean(ce_recall))
    << "; convergence step focal " << fmt("%.0f", mean(focal_conv)) << " (" << focal_converged << "/5 converged) vs ce "
    << fmt("%.0f", mean(ce_conv)) << " (" << ce_converged << "/5)";
  return {recall_ok && conv_ok, d.str()};
}

Verdict gamma_shape(const ImbalanceRuns& runs) {
  bool pass = true;
  std::ostringstream d;
  d << "per seed early/late/sd:";
  for (const auto& r : runs.focal) {
    std::vector<double> early, late;
    const auto& rec = r.trace.records();
    const std::int64_t steps = rec.back().step;
    for (const auto& row : rec) {
      if (row.step >= 1 && row.step <= steps / 20) early.push_back(row.gamma);
      if (row.step > steps - steps / 5) late.push_back(row.gamma);
    }
    const bool ok = mean(early) > mean(late) && stddev(late) < 0.2 * mean(late);
    pass = pass && ok;
    d << ' ' << fmt("%.3f", mean(early)) << '/' << fmt("%.3f", mean(late)) << '/' << fmt("%.3f", stddev(late));
  }
  return {pass, d.str()};
}

Verdict outliers(const std::vector<harness::RunResult>& l2, const std::vector<harness::RunResult>& focal) {
  std::vector<double> a, b;
  for (const auto& r : l2) a.push_back(metric(r, "test_clean_mse"));
  for (const auto& r : focal) b.push_back(metric(r, "test_clean_mse"));
  return {median(b) <= median(a),
          "median clean test MSE focal " + fmt("%.5f", median(b)) + " vs l2 " + fmt("%.5f", median(a))};
}

Verdict variance_learning(const harness::RunResult& r) {
  const auto& rec = r.trace.records();
  const std::int64_t steps = rec.back().step;
  std::vector<double> sigma2, p_hat;
  for (const auto& row : rec) {
    if (row.step > steps - steps / 5) {
      sigma2.push_back(row.sigma2.at(0));
      p_hat.push_back(row.p_hat);
    }
  }
  const auto [lo, hi] = std::minmax_element(sigma2.begin(), sigma2.end());
  const double drift = (*hi - *lo) / mean(sigma2);
  const double final_p = rec.back().p_hat;
  const bool in_band = final_p >= 0.2 && final_p <= 0.8 && mean(p_hat) >= 0.2 && mean(p_hat) <= 0.8;
  return {drift < 0.05 && in_band, "sigma^2 " + fmt("%.4f", rec.back().sigma2.at(0)) + ", drift over last 20% " +
                                       fmt("%.3g", drift) + ", final p_hat " + fmt("%.4f", final_p) +
                                       " (last-20% mean " + fmt("%.4f", mean(p_hat)) + ")"};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

Verdict determinism(const fs::path& out) {
  const auto config = load_with_seed("imbalance_focal_info.cfg", 1);
  const auto a = out / "determinism" / "a";
  const auto b = out / "determinism" / "b";
  run_all({{config, a.string()}, {config, b.string()}});
  const std::string ta = slurp(a / "trace.csv"), tb = slurp(b / "trace.csv");
  const bool same = !ta.empty() && ta == tb;
  return {same, std::string("trace.csv ") + (same ? "byte-identical" : "differs") + " across two runs (" +
                    std::to_string(ta.size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the focal loss library and harness"};
  std::string out = "acceptance_runs";
  app.add_option("--out", out, "Directory for training outputs");
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  const auto report = [&](int id, const std::string& title, const std::function<Verdict()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !v.pass;
    std::printf("[%s] %d %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", id, title.c_str(), v.detail.c_str(), seconds);
    std::fflush(stdout);
  };

  report(1, "quantile round-trip", quantile_round_trip);
  report(2, "information schedule", information_schedule);
  report(3, "detached-weight identity", detached_identity);
  report(4, "end-to-end gradient check", end_to_end_gradients);
  report(5, "regression probability", regression_probability);

  const fs::path root(out);
  ImbalanceRuns imbalance_runs;
  const auto ce_config = load_with_seed("imbalance_ce.cfg", 1);
  report(6, "imbalance behaviour", [&] {
    std::vector<Job> jobs;
    for (auto s : kSeeds) {
      jobs.push_back({load_with_seed("imbalance_ce.cfg", s), (root / "imbalance" / ("ce-" + std::to_string(s))).string()});
    }
    for (auto s : kSeeds) {
      jobs.push_back({load_with_seed("imbalance_focal_info.cfg", s),
                      (root / "imbalance" / ("focal-info-" + std::to_string(s))).string()});
    }
    auto results = run_all(jobs);
    imbalance_runs.ce.assign(results.begin(), results.begin() + 5);
    imbalance_runs.focal.assign(results.begin() + 5, results.end());
    return imbalance(imbalance_runs, ce_config);
  });
  report(7, "gamma trajectory shape", [&] {
    if (imbalance_runs.focal.empty()) return Verdict{false, "criterion 6 runs unavailable"};
    return gamma_shape(imbalance_runs);
  });
  report(8, "outlier robustness", [&] {
    std::vector<Job> jobs;
    for (auto s : kSeeds) {
      jobs.push_back({load_with_seed("outliers_l2.cfg", s), (root / "outliers" / ("l2-" + std::to_string(s))).string()});
    }
    for (auto s : kSeeds) {
      jobs.push_back({load_with_seed("outliers_focal.cfg", s),
                      (root / "outliers" / ("focal-l1-" + std::to_string(s))).string()});
    }
    const auto results = run_all(jobs);
    return outliers({results.begin(), results.begin() + 5}, {results.begin() + 5, results.end()});
  });
  report(9, "variance learning", [&] {
    const auto results = run_all({{load_with_seed("variance.cfg", 1), (root / "variance").string()}});
    return variance_learning(results.front());
  });
  report(10, "determinism", [&] { return determinism(root); });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
