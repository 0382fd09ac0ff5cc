// masopt: run experiment configs, compare traces, plot traces.
//
// Exit codes:
//   0  success (diverged runs are data, not failures)
//   1  unexpected runtime error
//   2  usage error, missing or unreadable input file
//   3  invalid config (the message names the key)
//   4  plot inputs with mismatched trace schemas

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "masopt/masopt.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitSchema = 4;

namespace fs = std::filesystem;

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<std::size_t> seeds_override;
  unsigned jobs = 1;
};

struct CompareOptions {
  std::vector<std::string> traces;
  std::vector<double> thresholds;
};

struct PlotArgs {
  std::vector<std::string> traces;
  std::string out;
  bool log_loss = false;
  std::string title;
};

int cmd_run(const RunOptions& opt) {
  masopt::ExperimentConfig cfg;
  try {
    cfg = masopt::load_config(opt.config);
  } catch (const masopt::ConfigFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const masopt::ConfigError& e) {
    std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kExitConfig;
  }
  if (opt.seeds_override) {
    if (*opt.seeds_override == 0) {
      std::cerr << "error: --seeds-override must be >= 1\n";
      return kExitUsage;
    }
    cfg.seeds = masopt::seed_range(*opt.seeds_override);
  }
  const fs::path out_dir = opt.out.empty() ? fs::path(cfg.out_dir) : fs::path(opt.out);

  const auto result = masopt::run_experiment(cfg, opt.jobs);
  masopt::write_experiment(result, out_dir);

  masopt::write_summary(std::cout, result.grid.rows);
  std::cout << masopt::format_report(result.comparison);
  std::size_t diverged = 0;
  for (const auto& r : result.grid.rows) diverged += r.n_diverged;
  if (diverged > 0) std::cout << "diverged runs: " << diverged << '\n';
  std::cout << "wrote " << result.grid.runs.size() << " traces to " << out_dir.string() << '\n';
  return kExitOk;
}

/// Loads traces labelled by file stem. Returns false (after printing) when
/// a file is missing or malformed.
bool load_traces(const std::vector<std::string>& paths, std::vector<masopt::LabeledTrace>& out) {
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot read trace " << path << '\n';
      return false;
    }
    try {
      auto loaded = masopt::read_trace(in);
      out.push_back({fs::path(path).stem().string(), std::move(loaded.columns),
                     std::move(loaded.trace)});
    } catch (const masopt::TraceFormatError& e) {
      std::cerr << "error: " << path << ": " << e.what() << '\n';
      return false;
    }
  }
  return true;
}

int cmd_compare(const CompareOptions& opt) {
  if (opt.traces.size() < 2) {
    std::cerr << "usage: masopt compare TRACE TRACE... [--thresholds t1,t2,...]\n";
    return kExitUsage;
  }
  std::vector<masopt::LabeledTrace> traces;
  if (!load_traces(opt.traces, traces)) return kExitUsage;
  std::map<std::string, masopt::Trace> by_label;
  for (auto& t : traces) {
    std::string label = t.label;
    // distinct files may share a stem
    for (int n = 2; by_label.count(label); ++n) label = t.label + "#" + std::to_string(n);
    by_label.emplace(label, std::move(t.trace));
  }
  std::cout << masopt::format_report(masopt::compare_trajectories(by_label, opt.thresholds));
  return kExitOk;
}

int cmd_plot(const PlotArgs& opt) {
  if (opt.traces.empty() || opt.out.empty()) {
    std::cerr << "usage: masopt plot TRACE... --out FILE.svg [--log-loss]\n";
    return kExitUsage;
  }
  std::vector<masopt::LabeledTrace> traces;
  if (!load_traces(opt.traces, traces)) return kExitUsage;
  std::string svg;
  try {
    svg = masopt::render_svg(traces, {opt.log_loss, opt.title});
  } catch (const masopt::PlotSchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  }
  const fs::path out(opt.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) {
    std::cerr << "error: cannot write " << opt.out << '\n';
    return kExitUsage;
  }
  f << svg;
  std::cout << "wrote " << opt.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixing ADAM and SGD: optimizer experiments"};
  app.require_subcommand(1);

  RunOptions run_opt;
  auto* run = app.add_subcommand("run", "Run every optimizer/seed in a config file");
  run->add_option("--config", run_opt.config, "Experiment config file")->required();
  run->add_option("--out", run_opt.out, "Output directory (overrides out_dir)");
  run->add_option("--seeds-override", run_opt.seeds_override, "Use seeds 0..N-1");
  run->add_option("--jobs", run_opt.jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  CompareOptions cmp_opt;
  auto* compare = app.add_subcommand("compare", "Rank traces by steps-to-threshold and final loss");
  compare->add_option("traces", cmp_opt.traces, "Trace files");
  compare->add_option("--thresholds", cmp_opt.thresholds, "Loss thresholds")->delimiter(',');

  PlotArgs plot_opt;
  auto* plot = app.add_subcommand("plot", "Render traces to an SVG figure");
  plot->add_option("traces", plot_opt.traces, "Trace files");
  plot->add_option("--out", plot_opt.out, "Output SVG file");
  plot->add_flag("--log-loss", plot_opt.log_loss, "Log-scale loss axis");
  plot->add_option("--title", plot_opt.title, "Figure title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_opt);
    if (*compare) return cmd_compare(cmp_opt);
    if (*plot) return cmd_plot(plot_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
