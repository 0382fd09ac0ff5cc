// Experiment configs: a `key = value` text document describing one base
// RunSpec, the optimizers (or lambda grid) to run it with, and the seeds.
//
//   # comment
//   problem   = rosenbrock        # factored | factored_literal | rosenbrock
//                                 # | l1_cone | quadratic | mlp
//   optimizer = sgd, adam, mas    # or: lambda_grid = 1:0, 0:1, 0.5:0.5
//   lr        = 1e-4
//   epochs    = 1000
//   seeds     = 5                 # seeds 0..4; or seed_list = 3, 9
//   out_dir   = out/rosenbrock
//
// Unknown or repeated keys are errors. Omitted keys keep the defaults of
// HyperParams / ProblemSpec / RunSpec.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "masopt/harness.hpp"
#include "masopt/trace_io.hpp"

namespace masopt {

/// Bad key or bad value. `key()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(message), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// The config file itself could not be read.
class ConfigFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string name = "experiment";
  RunSpec base;
  std::vector<GridEntry> entries;
  bool from_lambda_grid = false;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "out";
  std::vector<double> thresholds;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_number(const std::string& key, std::string_view v) {
  try {
    return parse_double(trim(v));
  } catch (const TraceFormatError&) {
    throw ConfigError(key, "invalid number for '" + key + "': '" + std::string(v) + "'");
  }
}

inline std::uint64_t to_count(const std::string& key, std::string_view v) {
  const double d = to_number(key, v);
  if (!(d >= 0.0) || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw ConfigError(key, "'" + key + "' must be a non-negative integer");
  }
  return static_cast<std::uint64_t>(d);
}

inline bool to_bool(const std::string& key, std::string_view v) {
  v = trim(v);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key, "'" + key + "' must be true or false");
}

inline std::vector<double> to_numbers(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (auto f : split_fields(v)) out.push_back(to_number(key, f));
  return out;
}

inline OptimizerKind to_optimizer(const std::string& key, std::string_view v) {
  v = trim(v);
  if (v == "sgd") return OptimizerKind::kSgd;
  if (v == "adam") return OptimizerKind::kAdam;
  if (v == "mas") return OptimizerKind::kMas;
  throw ConfigError(key, "unknown optimizer '" + std::string(v) + "'");
}

inline ProblemKind to_problem(const std::string& key, std::string_view v) {
  v = trim(v);
  for (auto k : {ProblemKind::kFactored, ProblemKind::kFactoredLiteral, ProblemKind::kRosenbrock,
                 ProblemKind::kL1Cone, ProblemKind::kQuadratic, ProblemKind::kMlp}) {
    if (v == to_string(k)) return k;
  }
  throw ConfigError(key, "unknown problem '" + std::string(v) + "'");
}

inline std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_double(xs[i]);
  return s;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
  using detail::trim;
  std::map<std::string, std::string> kv;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), "line " + std::to_string(line_no) +
                                               ": expected 'key = value'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (!kv.emplace(key, value).second) throw ConfigError(key, "duplicate key '" + key + "'");
  }

  ExperimentConfig cfg;
  RunSpec& b = cfg.base;
  HyperParams& h = b.hyper;
  ProblemSpec& p = b.problem;
  std::vector<OptimizerKind> optimizers;
  std::optional<std::vector<LambdaPair>> grid;
  std::optional<std::vector<std::uint64_t>> seed_list;
  std::optional<std::uint64_t> seed_count;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"name", [&](auto&, auto& v) { cfg.name = v; }},
      {"problem", [&](auto& k, auto& v) { p.kind = detail::to_problem(k, v); }},
      {"optimizer",
       [&](auto& k, auto& v) {
         for (auto f : split_fields(v)) optimizers.push_back(detail::to_optimizer(k, f));
       }},
      {"lambda_a", [&](auto& k, auto& v) { h.lambda_a = detail::to_number(k, v); }},
      {"lambda_s", [&](auto& k, auto& v) { h.lambda_s = detail::to_number(k, v); }},
      {"lambda_grid",
       [&](auto& k, auto& v) {
         grid.emplace();
         for (auto f : split_fields(v)) {
           const auto colon = f.find(':');
           if (colon == std::string_view::npos) {
             throw ConfigError(k, "lambda_grid entries look like 'lambda_a:lambda_s'");
           }
           grid->push_back({detail::to_number(k, f.substr(0, colon)),
                            detail::to_number(k, f.substr(colon + 1))});
         }
       }},
      {"unconstrained_lambdas",
       [&](auto& k, auto& v) { h.unconstrained_lambdas = detail::to_bool(k, v); }},
      {"lr", [&](auto& k, auto& v) { h.lr = detail::to_number(k, v); }},
      {"momentum", [&](auto& k, auto& v) { h.momentum = detail::to_number(k, v); }},
      {"weight_decay", [&](auto& k, auto& v) { h.weight_decay = detail::to_number(k, v); }},
      {"dampening", [&](auto& k, auto& v) { h.dampening = detail::to_number(k, v); }},
      {"nesterov", [&](auto& k, auto& v) { h.nesterov = detail::to_bool(k, v); }},
      {"beta1", [&](auto& k, auto& v) { h.beta1 = detail::to_number(k, v); }},
      {"beta2", [&](auto& k, auto& v) { h.beta2 = detail::to_number(k, v); }},
      {"eps", [&](auto& k, auto& v) { h.eps = detail::to_number(k, v); }},
      {"amsgrad", [&](auto& k, auto& v) { h.amsgrad = detail::to_bool(k, v); }},
      {"epochs", [&](auto& k, auto& v) { b.epochs = static_cast<int>(detail::to_count(k, v)); }},
      {"batch_size", [&](auto& k, auto& v) { b.batch_size = detail::to_count(k, v); }},
      {"seeds", [&](auto& k, auto& v) { seed_count = detail::to_count(k, v); }},
      {"seed_list",
       [&](auto& k, auto& v) {
         seed_list.emplace();
         for (auto f : split_fields(v)) seed_list->push_back(detail::to_count(k, f));
       }},
      {"out_dir", [&](auto&, auto& v) { cfg.out_dir = v; }},
      {"thresholds", [&](auto& k, auto& v) { cfg.thresholds = detail::to_numbers(k, v); }},
      {"start", [&](auto& k, auto& v) { p.start = detail::to_numbers(k, v); }},
      {"rosenbrock_a", [&](auto& k, auto& v) { p.rosenbrock_a = detail::to_number(k, v); }},
      {"rosenbrock_b", [&](auto& k, auto& v) { p.rosenbrock_b = detail::to_number(k, v); }},
      {"dim", [&](auto& k, auto& v) { p.dim = detail::to_count(k, v); }},
      {"samples", [&](auto& k, auto& v) { p.samples = detail::to_count(k, v); }},
      {"features", [&](auto& k, auto& v) { p.features = detail::to_count(k, v); }},
      {"classes", [&](auto& k, auto& v) { p.classes = detail::to_count(k, v); }},
      {"hidden", [&](auto& k, auto& v) { p.hidden = detail::to_count(k, v); }},
      {"data_seed", [&](auto& k, auto& v) { p.data_seed = detail::to_count(k, v); }},
  };

  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key, "unknown key '" + key + "'");
    it->second(key, value);
  }

  if (grid && !optimizers.empty()) {
    throw ConfigError("lambda_grid", "give either 'optimizer' or 'lambda_grid', not both");
  }
  if (seed_list && seed_count) {
    throw ConfigError("seed_list", "give either 'seeds' or 'seed_list', not both");
  }
  if (seed_count) {
    if (*seed_count == 0) throw ConfigError("seeds", "'seeds' must be >= 1");
    cfg.seeds = seed_range(*seed_count);
  }
  if (seed_list) {
    if (seed_list->empty()) throw ConfigError("seed_list", "'seed_list' is empty");
    cfg.seeds = *seed_list;
  }
  if (b.epochs < 1) throw ConfigError("epochs", "'epochs' must be >= 1");
  if (b.batch_size < 1) throw ConfigError("batch_size", "'batch_size' must be >= 1");

  if (grid) {
    cfg.from_lambda_grid = true;
    for (const auto& pair : *grid) {
      if (!h.unconstrained_lambdas &&
          std::abs(pair.lambda_a + pair.lambda_s - 1.0) > kLambdaSumTolerance) {
        throw ConfigError("lambda_grid", "lambda pairs must sum to 1");
      }
      cfg.entries.push_back(entry_for(pair));
    }
  } else {
    if (optimizers.empty()) optimizers.push_back(OptimizerKind::kMas);
    for (auto k : optimizers) cfg.entries.push_back(entry_for(k, h.lambda_a, h.lambda_s));
  }

  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, std::string("'") + key + "' " + what);
  };
  require(h.lr > 0.0 && std::isfinite(h.lr), "lr", "must be > 0");
  require(h.weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(h.momentum >= 0.0 && h.momentum < 1.0, "momentum", "must be in [0, 1)");
  require(h.dampening >= 0.0 && h.dampening < 1.0, "dampening", "must be in [0, 1)");
  require(!h.nesterov || (h.momentum > 0.0 && h.dampening == 0.0), "nesterov",
          "needs momentum > 0 and dampening = 0");
  require(h.beta1 >= 0.0 && h.beta1 < 1.0, "beta1", "must be in [0, 1)");
  require(h.beta2 >= 0.0 && h.beta2 < 1.0, "beta2", "must be in [0, 1)");
  require(h.eps > 0.0, "eps", "must be > 0");
  const bool has_mas =
      std::any_of(cfg.entries.begin(), cfg.entries.end(),
                  [](const GridEntry& e) { return e.kind == OptimizerKind::kMas; });
  if (has_mas && !grid) {
    require(h.lambda_a >= 0.0, "lambda_a", "must be >= 0");
    require(h.lambda_s >= 0.0, "lambda_s", "must be >= 0");
    require(h.unconstrained_lambdas ||
                std::abs(h.lambda_a + h.lambda_s - 1.0) <= kLambdaSumTolerance,
            "lambda_a", "plus lambda_s must equal 1 (or set unconstrained_lambdas = true)");
  }
  if (p.kind == ProblemKind::kRosenbrock) require(p.rosenbrock_b > 0.0, "rosenbrock_b", "must be > 0");
  if (p.kind == ProblemKind::kQuadratic) require(p.dim >= 1, "dim", "must be >= 1");
  if (p.start) {
    const std::size_t want = p.kind == ProblemKind::kQuadratic ? p.dim : 2;
    require(p.kind != ProblemKind::kMlp, "start", "is not supported for the mlp problem");
    require(p.start->size() == want, "start", "has the wrong number of coordinates");
  }
  if (p.kind == ProblemKind::kMlp) {
    require(p.samples >= 2, "samples", "must be >= 2");
    require(p.features >= 1, "features", "must be >= 1");
    require(p.classes >= 2, "classes", "must be >= 2");
    require(p.hidden >= 1, "hidden", "must be >= 1");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("cannot read config file: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

/// Writes every key explicitly, so parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  const RunSpec& b = cfg.base;
  const HyperParams& h = b.hyper;
  const ProblemSpec& p = b.problem;
  auto fd = format_double;
  auto fb = [](bool v) { return std::string(v ? "true" : "false"); };
  std::ostringstream o;
  o << "name = " << cfg.name << '\n';
  o << "problem = " << to_string(p.kind) << '\n';
  if (cfg.from_lambda_grid) {
    o << "lambda_grid = ";
    for (std::size_t i = 0; i < cfg.entries.size(); ++i) {
      o << (i ? ", " : "") << fd(cfg.entries[i].lambda_a) << ':' << fd(cfg.entries[i].lambda_s);
    }
    o << '\n';
  } else {
    o << "optimizer = ";
    for (std::size_t i = 0; i < cfg.entries.size(); ++i) {
      o << (i ? ", " : "") << to_string(cfg.entries[i].kind);
    }
    o << '\n';
  }
  o << "lambda_a = " << fd(h.lambda_a) << '\n';
  o << "lambda_s = " << fd(h.lambda_s) << '\n';
  o << "unconstrained_lambdas = " << fb(h.unconstrained_lambdas) << '\n';
  o << "lr = " << fd(h.lr) << '\n';
  o << "momentum = " << fd(h.momentum) << '\n';
  o << "weight_decay = " << fd(h.weight_decay) << '\n';
  o << "dampening = " << fd(h.dampening) << '\n';
  o << "nesterov = " << fb(h.nesterov) << '\n';
  o << "beta1 = " << fd(h.beta1) << '\n';
  o << "beta2 = " << fd(h.beta2) << '\n';
  o << "eps = " << fd(h.eps) << '\n';
  o << "amsgrad = " << fb(h.amsgrad) << '\n';
  o << "epochs = " << b.epochs << '\n';
  o << "batch_size = " << b.batch_size << '\n';
  if (cfg.seeds == seed_range(cfg.seeds.size())) {
    o << "seeds = " << cfg.seeds.size() << '\n';
  } else {
    o << "seed_list = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) o << (i ? ", " : "") << cfg.seeds[i];
    o << '\n';
  }
  o << "out_dir = " << cfg.out_dir << '\n';
  if (!cfg.thresholds.empty()) o << "thresholds = " << detail::join(cfg.thresholds) << '\n';
  if (p.start) o << "start = " << detail::join(*p.start) << '\n';
  o << "rosenbrock_a = " << fd(p.rosenbrock_a) << '\n';
  o << "rosenbrock_b = " << fd(p.rosenbrock_b) << '\n';
  o << "dim = " << p.dim << '\n';
  o << "samples = " << p.samples << '\n';
  o << "features = " << p.features << '\n';
  o << "classes = " << p.classes << '\n';
  o << "hidden = " << p.hidden << '\n';
  o << "data_seed = " << p.data_seed << '\n';
  return o.str();
}

/// Every RunSpec the config describes, entry-major then seed order.
inline std::vector<RunSpec> expand_runs(const ExperimentConfig& cfg) {
  std::vector<RunSpec> runs;
  for (const auto& e : cfg.entries) {
    for (auto seed : cfg.seeds) {
      RunSpec r = cfg.base;
      r.optimizer = e.kind;
      r.hyper.lambda_a = e.lambda_a;
      r.hyper.lambda_s = e.lambda_s;
      r.seed = seed;
      runs.push_back(r);
    }
  }
  return runs;
}

// ---------------------------------------------------------------------------

/// "SGD", "Adam", or "MAS_<lambda_a>_<lambda_s>".
inline std::string run_label(const GridEntry& e) {
  if (e.kind != OptimizerKind::kMas) return e.label;
  return e.label + "_" + format_double(e.lambda_a) + "_" + format_double(e.lambda_s);
}

struct ExperimentResult {
  GridResult grid;
  /// Over the first seed's traces, one per entry.
  ComparisonReport comparison;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1) {
  ExperimentResult out;
  out.grid = run_grid(cfg.base, cfg.entries, cfg.seeds, jobs);
  std::map<std::string, Trace> first_seed;
  for (const auto& run : out.grid.runs) {
    if (run.seed == cfg.seeds.front()) {
      first_seed.emplace(run_label(out.grid.entries[run.entry]), run.result.trace);
    }
  }
  out.comparison = compare_trajectories(first_seed, cfg.thresholds);
  return out;
}

inline std::filesystem::path trace_path(const std::filesystem::path& dir, const GridEntry& e,
                                        std::uint64_t seed) {
  return dir / (run_label(e) + "_seed" + std::to_string(seed) + ".csv");
}

/// Writes <out_dir>/summary.csv, <out_dir>/comparison.txt and one trace per
/// run named <label>_seed<N>.csv.
inline void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& run : result.grid.runs) {
    std::ofstream f(trace_path(dir, result.grid.entries[run.entry], run.seed));
    write_trace(f, run.result.trace);
  }
  std::ofstream summary(dir / "summary.csv");
  write_summary(summary, result.grid.rows);
  std::ofstream cmp(dir / "comparison.txt");
  cmp << format_report(result.comparison);
}

}  // namespace masopt
