// Command line front end: train, compare, gamma-trace and gen-data.

#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autofocal/harness.hpp"
#include "autofocal/svg.hpp"

namespace fs = std::filesystem;
using namespace autofocal;

namespace {

int cmd_train(const std::string& path, std::string out, bool svg) {
  auto config = harness::ExperimentConfig::load(path);
  if (out.empty()) out = config.output_dir;
  if (out.empty()) throw autofocal::ConfigError("train: no output directory (use --out or output.dir)");
  config.svg = config.svg || svg;
  const auto result = harness::run(config, out);
  const auto& last = result.trace.records().back();
  std::cout << config.name << ": " << last.step << " steps, loss " << data::format_double(last.loss_total)
            << ", gamma " << data::format_double(last.gamma) << ", p_hat " << data::format_double(last.p_hat) << '\n';
  for (const auto& [name, value] : result.test_metrics) std::cout << "  " << name << " = " << value << '\n';
  for (const auto& f : result.files) std::cout << "wrote " << f << '\n';
  return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out, bool svg, unsigned workers) {
  if (out.empty()) throw autofocal::ConfigError("compare: --out is required");
  std::vector<harness::ExperimentConfig> configs;
  for (const auto& p : paths) {
    configs.push_back(harness::ExperimentConfig::load(p));
    configs.back().svg = configs.back().svg || svg;
  }
  const auto report = harness::compare(configs, out, workers);
  std::cout << harness::format_comparison(report);
  return 0;
}

int cmd_gamma_trace(const std::vector<std::string>& schedules, const std::string& grid, const std::string& out,
                    bool svg) {
  if (out.empty()) throw autofocal::ConfigError("gamma-trace: --out is required");
  std::vector<GammaSchedule<double>> parsed;
  for (const auto& s : schedules) parsed.push_back(harness::parse_schedule(s));
  const auto table = harness::gamma_trace(parsed, harness::parse_grid(grid));
  harness::ensure_writable_directory(out);
  const auto csv = (fs::path(out) / "gamma_trace.csv").string();
  harness::write_gamma_csv(table, csv);
  std::cout << "wrote " << csv << '\n';
  if (svg) {
    std::vector<svg::Series> series;
    for (std::size_t k = 0; k < table.names.size(); ++k) {
      series.push_back({table.names[k], table.p_hat, table.gamma[k]});
    }
    const auto plot = (fs::path(out) / "gamma_trace.svg").string();
    svg::write_line_plot(plot, "gamma versus smoothed p_correct", "p_hat", series);
    std::cout << "wrote " << plot << '\n';
  }
  return 0;
}

int cmd_gen_data(const std::string& path, const std::string& out) {
  if (out.empty()) throw autofocal::ConfigError("gen-data: --out is required");
  const auto config = autofocal::Config::load(path);
  const auto seed = static_cast<std::uint64_t>(config.integer("seed", 1));
  const auto spec = harness::dataset_spec_from_config(config, seed);
  config.reject_unused();
  for (const auto& f : harness::generate_data_files(spec, out)) std::cout << "wrote " << f << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Focal losses with automated focus: training and comparison harness"};
  app.require_subcommand(1);
  std::string out;
  bool svg = false;
  app.add_option("--out", out, "Output directory");

  auto* train = app.add_subcommand("train", "Train one configuration");
  std::string train_config;
  train->add_option("config", train_config, "Experiment config file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Output directory");
  train->add_flag("--svg", svg, "Also write SVG plots");

  auto* cmp = app.add_subcommand("compare", "Train several configurations that differ only in the loss");
  std::vector<std::string> compare_configs;
  unsigned workers = 1;
  cmp->add_option("configs", compare_configs, "Experiment config files")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", out, "Output directory");
  cmp->add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);
  cmp->add_flag("--svg", svg, "Also write SVG plots per run");

  auto* gamma = app.add_subcommand("gamma-trace", "Tabulate gamma schedules over a grid of p_hat values");
  std::vector<std::string> schedules;
  std::string grid = "0.01:0.99:0.01";
  gamma->add_option("--schedule", schedules, "info | quantile:<h> | fixed:<gamma>, optionally ',clamp=<max>'")
      ->required();
  gamma->add_option("--grid", grid, "start:stop:step or a comma separated list in (0, 1)");
  gamma->add_option("--out", out, "Output directory");
  gamma->add_flag("--svg", svg, "Also write an SVG plot");

  auto* gen = app.add_subcommand("gen-data", "Write train/validation/test CSV files for a dataset spec");
  std::string data_spec;
  gen->add_option("spec", data_spec, "Config file with data.* keys")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_config, out, svg);
    if (*cmp) return cmd_compare(compare_configs, out, svg, workers);
    if (*gamma) return cmd_gamma_trace(schedules, grid, out, svg);
    if (*gen) return cmd_gen_data(data_spec, out);
  } catch (const harness::TrainingAborted& e) {
    std::cerr << "error: training aborted: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
