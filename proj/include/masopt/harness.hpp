// Deterministic experiment runner: single runs, lambda grids over seeds,
// summary aggregation and trajectory comparison.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "masopt/dataset.hpp"
#include "masopt/mlp.hpp"
#include "masopt/optimizers.hpp"
#include "masopt/problems.hpp"
#include "masopt/rng.hpp"

namespace masopt {

enum class OptimizerKind { kSgd, kAdam, kMas };

enum class ProblemKind { kFactored, kFactoredLiteral, kRosenbrock, kL1Cone, kQuadratic, kMlp };

inline std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kAdam: return "adam";
    case OptimizerKind::kMas: return "mas";
  }
  return "?";
}

inline std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::kFactored: return "factored";
    case ProblemKind::kFactoredLiteral: return "factored_literal";
    case ProblemKind::kRosenbrock: return "rosenbrock";
    case ProblemKind::kL1Cone: return "l1_cone";
    case ProblemKind::kQuadratic: return "quadratic";
    case ProblemKind::kMlp: return "mlp";
  }
  return "?";
}

/// Every scalar the three optimizers take. Defaults: beta1 = 0.9,
/// beta2 = 0.999, eps = 1e-8, no amsgrad, no dampening, no nesterov.
struct HyperParams {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.0;
  double dampening = 0.0;
  bool nesterov = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool amsgrad = false;
  double lambda_a = 0.5;
  double lambda_s = 0.5;
  bool unconstrained_lambdas = false;

  SgdHyper sgd() const { return {lr, weight_decay, momentum, dampening, nesterov, false}; }
  AdamHyper adam() const {
    return {lr, weight_decay, beta1, beta2, eps, amsgrad, EpsilonPlacement::kIncrement};
  }
  MasHyper mas() const {
    MasHyper h{lambda_a, lambda_s, sgd(), adam(), unconstrained_lambdas};
    h.validate();
    return h;
  }

  bool operator==(const HyperParams&) const = default;
};

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kFactored;
  double rosenbrock_a = 1.0;
  double rosenbrock_b = 100.0;
  /// Overrides the problem's default start (toy surfaces and quadratics).
  std::optional<std::vector<double>> start;
  std::size_t dim = 4;  // quadratic only
  // mlp only
  std::size_t samples = 600;
  std::size_t features = 8;
  std::size_t classes = 3;
  std::size_t hidden = 16;
  /// Seeds the dataset, the train/test split and random quadratics.
  std::uint64_t data_seed = 0;

  bool operator==(const ProblemSpec&) const = default;
};

struct RunSpec {
  ProblemSpec problem;
  OptimizerKind optimizer = OptimizerKind::kMas;
  HyperParams hyper;
  int epochs = 1;
  std::size_t batch_size = 32;  // batched problems only
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ArgumentError("run: epochs must be >= 1");
    if (batch_size < 1) throw ArgumentError("run: batch_size must be >= 1");
  }

  bool operator==(const RunSpec&) const = default;
};

/// Parameters are snapshotted into trace rows only up to this dimension.
inline constexpr std::size_t kMaxTracedParams = 8;

struct TraceRecord {
  std::size_t step = 0;  // 1-based optimizer step
  int epoch = 0;         // 1-based
  double loss = 0.0;     // full objective after the step
  double step_norm = 0.0;
  double effective_lr = 0.0;
  std::vector<double> params;  // empty when dim > kMaxTracedParams

  bool operator==(const TraceRecord&) const = default;
};

struct Trace {
  std::vector<TraceRecord> records;
  bool diverged = false;
  std::size_t diverged_step = 0;  // meaningful only when diverged
  std::size_t param_columns = 0;

  bool operator==(const Trace&) const = default;
};

enum class MetricKind { kFinalLoss, kTestAccuracy };

struct RunResult {
  Trace trace;
  /// Final loss (toy problems) or held-out accuracy in percent (mlp).
  /// Empty for diverged runs.
  std::optional<double> metric;
  MetricKind metric_kind = MetricKind::kFinalLoss;
};

inline ProblemPtr make_problem(const ProblemSpec& spec) {
  auto start_or = [&](ParamVector fallback) {
    return spec.start ? ParamVector(*spec.start) : fallback;
  };
  switch (spec.kind) {
    case ProblemKind::kFactored:
      return std::make_shared<FactoredSurface>(ToySurfaceForm::kSquaredError,
                                               start_or({1.25, 1.5}));
    case ProblemKind::kFactoredLiteral:
      return std::make_shared<FactoredSurface>(ToySurfaceForm::kLiteral, start_or({1.25, 1.5}));
    case ProblemKind::kRosenbrock:
      return std::make_shared<Rosenbrock>(spec.rosenbrock_a, spec.rosenbrock_b,
                                          start_or({3.0, 1.0}));
    case ProblemKind::kL1Cone:
      return std::make_shared<L1Cone>(start_or({3.0, 2.0}));
    case ProblemKind::kQuadratic: {
      Rng rng(spec.data_seed);
      auto q = random_quadratic(spec.dim, rng);
      if (!spec.start) return q;
      std::vector<double> a(spec.dim * spec.dim);
      for (std::size_t r = 0; r < spec.dim; ++r)
        for (std::size_t c = 0; c < spec.dim; ++c) a[r * spec.dim + c] = q->matrix(r, c);
      return std::make_shared<Quadratic>(std::move(a), q->minimizer(), ParamVector(*spec.start));
    }
    case ProblemKind::kMlp: {
      DatasetSpec ds;
      ds.samples = spec.samples;
      ds.features = spec.features;
      ds.classes = spec.classes;
      ds.seed = spec.data_seed;
      auto data = std::make_shared<const SyntheticDataset>(generate_dataset(ds));
      return make_mlp_problem(std::move(data), spec.hidden);
    }
  }
  throw ArgumentError("unknown problem kind");
}

inline AnyOptimizer make_optimizer(OptimizerKind kind, const HyperParams& h, std::size_t dim) {
  switch (kind) {
    case OptimizerKind::kSgd: return AnyOptimizer(Sgd(h.sgd(), dim));
    case OptimizerKind::kAdam: return AnyOptimizer(Adam(h.adam(), dim));
    case OptimizerKind::kMas: return AnyOptimizer(Mas(h.mas(), dim));
  }
  throw ArgumentError("unknown optimizer kind");
}

/// Runs one spec against an already-built problem. Toy problems take one
/// full-gradient step per epoch; batched problems reshuffle the training
/// positions every epoch with the run seed and step once per mini-batch.
/// A non-finite loss, parameter or gradient stops the run and marks the
/// trace as diverged; the offending row is kept as the last record.
inline RunResult run_single(const RunSpec& spec, const Problem& problem) {
  spec.validate();
  Rng root(spec.seed);
  Rng init_rng = root.split();
  Rng shuffle_rng = root.split();

  const std::size_t dim = problem.dim();
  ParamVector w = problem.initial_point(init_rng);
  AnyOptimizer opt = make_optimizer(spec.optimizer, spec.hyper, dim);

  RunResult result;
  result.trace.param_columns = dim <= kMaxTracedParams ? dim : 0;
  result.trace.records.reserve(static_cast<std::size_t>(spec.epochs));

  std::vector<std::size_t> order(problem.sample_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batches =
      problem.batched() ? (order.size() + spec.batch_size - 1) / spec.batch_size : 1;

  std::size_t step = 0;
  for (int epoch = 1; epoch <= spec.epochs && !result.trace.diverged; ++epoch) {
    if (problem.batched()) shuffle_rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < batches; ++b) {
      ++step;
      TraceRecord rec;
      rec.step = step;
      rec.epoch = epoch;

      GradVector grad;
      if (problem.batched()) {
        const std::size_t lo = b * spec.batch_size;
        const std::size_t hi = std::min(order.size(), lo + spec.batch_size);
        grad = problem
                   .batch_loss_and_gradient(
                       w, std::span<const std::size_t>(order).subspan(lo, hi - lo))
                   .grad;
      } else {
        grad = problem.gradient(w);
      }

      bool ok = all_finite(grad);
      if (ok) {
        StepResult r = opt.step(w, grad);
        rec.step_norm = distance(r.params, w);
        rec.effective_lr = r.report.effective_lr;
        w = std::move(r.params);
        rec.loss = problem.loss(w);
        ok = std::isfinite(rec.loss) && all_finite(w);
      } else {
        rec.loss = std::numeric_limits<double>::quiet_NaN();
      }
      if (result.trace.param_columns > 0) rec.params = w.values();
      result.trace.records.push_back(std::move(rec));
      if (!ok) {
        result.trace.diverged = true;
        result.trace.diverged_step = step;
        break;
      }
    }
  }

  if (const auto* mlp = dynamic_cast<const MlpProblem*>(&problem)) {
    result.metric_kind = MetricKind::kTestAccuracy;
    if (!result.trace.diverged) result.metric = mlp->test_accuracy(w);
  } else if (!result.trace.diverged) {
    result.metric = result.trace.records.back().loss;
  }
  return result;
}

inline RunResult run_single(const RunSpec& spec) {
  return run_single(spec, *make_problem(spec.problem));
}

// ---------------------------------------------------------------------------
// Grids and summaries.

struct LambdaPair {
  double lambda_a = 0.5;
  double lambda_s = 0.5;
  bool operator==(const LambdaPair&) const = default;
};

/// The standard mixing grid, in summary row order:
/// ADAM (1, 0), SGD (0, 1), then MAS at 0.5/0.5, 0.4/0.6, 0.6/0.4, 0.7/0.3,
/// 0.3/0.7.
inline std::vector<LambdaPair> table_lambda_grid() {
  return {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}, {0.4, 0.6},
          {0.6, 0.4}, {0.7, 0.3}, {0.3, 0.7}};
}

struct GridEntry {
  std::string label;  // "Adam", "SGD" or "MAS"
  OptimizerKind kind = OptimizerKind::kMas;
  double lambda_a = 0.5;
  double lambda_s = 0.5;

  bool operator==(const GridEntry&) const = default;
};

/// (1, 0) becomes the ADAM baseline, (0, 1) the SGD baseline, anything else
/// a MAS entry.
inline GridEntry entry_for(LambdaPair p) {
  if (p.lambda_a == 1.0 && p.lambda_s == 0.0) return {"Adam", OptimizerKind::kAdam, 1.0, 0.0};
  if (p.lambda_a == 0.0 && p.lambda_s == 1.0) return {"SGD", OptimizerKind::kSgd, 0.0, 1.0};
  return {"MAS", OptimizerKind::kMas, p.lambda_a, p.lambda_s};
}

inline GridEntry entry_for(OptimizerKind kind, double lambda_a, double lambda_s) {
  switch (kind) {
    case OptimizerKind::kSgd: return {"SGD", kind, 0.0, 1.0};
    case OptimizerKind::kAdam: return {"Adam", kind, 1.0, 0.0};
    case OptimizerKind::kMas: return {"MAS", kind, lambda_a, lambda_s};
  }
  throw ArgumentError("unknown optimizer kind");
}

struct SummaryRow {
  std::string optimizer;
  double lambda_a = 0.0;
  double lambda_s = 0.0;
  std::optional<double> metric_avg;  // empty when every run diverged
  std::optional<double> metric_max;
  std::size_t n_runs = 0;
  std::size_t n_diverged = 0;

  bool operator==(const SummaryRow&) const = default;
};

/// Mean and max over the finite per-seed metrics; diverged runs (empty
/// metrics) are counted but excluded.
inline SummaryRow aggregate(const GridEntry& entry, std::span<const std::optional<double>> finals) {
  SummaryRow row{entry.label, entry.lambda_a, entry.lambda_s, {}, {}, finals.size(), 0};
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  for (const auto& m : finals) {
    if (!m || !std::isfinite(*m)) {
      ++row.n_diverged;
      continue;
    }
    sum += *m;
    ++used;
    lo = std::min(lo, *m);
    row.metric_max = row.metric_max ? std::max(*row.metric_max, *m) : *m;
  }
  // sum / n can land an ulp outside [min, max]; the true mean cannot
  if (used > 0) row.metric_avg = std::clamp(sum / static_cast<double>(used), lo, *row.metric_max);
  return row;
}

struct GridRun {
  std::size_t entry = 0;
  std::uint64_t seed = 0;
  RunResult result;
};

struct GridResult {
  std::vector<GridEntry> entries;
  std::vector<SummaryRow> rows;  // one per entry, in entry order
  std::vector<GridRun> runs;     // entry-major, then seed order
};

/// Runs every (entry, seed) pair against one shared problem instance.
/// `jobs` > 1 spreads runs over threads; results are placed by index so the
/// output does not depend on completion order.
inline GridResult run_grid(const RunSpec& base, std::span<const GridEntry> entries,
                           std::span<const std::uint64_t> seeds, unsigned jobs = 1) {
  base.validate();
  for (const auto& e : entries) {
    if (e.kind == OptimizerKind::kMas && !base.hyper.unconstrained_lambdas &&
        std::abs(e.lambda_a + e.lambda_s - 1.0) > kLambdaSumTolerance) {
      throw ArgumentError("run_grid: lambda pair does not sum to 1");
    }
  }
  const ProblemPtr problem = make_problem(base.problem);

  GridResult out;
  out.entries.assign(entries.begin(), entries.end());
  out.runs.resize(entries.size() * seeds.size());
  std::vector<RunSpec> specs(out.runs.size());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const std::size_t i = e * seeds.size() + s;
      RunSpec spec = base;
      spec.optimizer = entries[e].kind;
      spec.hyper.lambda_a = entries[e].lambda_a;
      spec.hyper.lambda_s = entries[e].lambda_s;
      spec.seed = seeds[s];
      specs[i] = spec;
      out.runs[i].entry = e;
      out.runs[i].seed = seeds[s];
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      out.runs[i].result = run_single(specs[i], *problem);
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  for (std::size_t e = 0; e < entries.size(); ++e) {
    std::vector<std::optional<double>> finals;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      finals.push_back(out.runs[e * seeds.size() + s].result.metric);
    }
    out.rows.push_back(aggregate(entries[e], finals));
  }
  return out;
}

/// Lambda-pair convenience form; rows come back in the order given.
inline std::vector<SummaryRow> run_lambda_grid(const RunSpec& base,
                                               std::span<const LambdaPair> lambdas,
                                               std::span<const std::uint64_t> seeds,
                                               unsigned jobs = 1) {
  for (const auto& p : lambdas) {
    if (!base.hyper.unconstrained_lambdas &&
        std::abs(p.lambda_a + p.lambda_s - 1.0) > kLambdaSumTolerance) {
      throw ArgumentError("run_lambda_grid: lambda pair does not sum to 1");
    }
  }
  std::vector<GridEntry> entries;
  for (const auto& p : lambdas) entries.push_back(entry_for(p));
  return run_grid(base, entries, seeds, jobs).rows;
}

/// Seeds 0 .. n-1.
inline std::vector<std::uint64_t> seed_range(std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), std::uint64_t{0});
  return seeds;
}

// ---------------------------------------------------------------------------
// Trajectory comparison.

struct ThresholdResult {
  double threshold = 0.0;
  /// (label, first step with loss <= threshold), earliest first; labels
  /// that never got there come last with an empty step.
  std::vector<std::pair<std::string, std::optional<std::size_t>>> order;
  /// Set only when exactly one trace got there first.
  std::optional<std::string> winner;
};

struct ComparisonReport {
  std::size_t common_steps = 0;
  bool length_mismatch = false;  // traces differed in length; compared over the common prefix
  std::vector<ThresholdResult> thresholds;
  /// (label, loss at the last common step), lowest first. Non-finite losses
  /// rank last.
  std::vector<std::pair<std::string, double>> final_ranking;
};

inline std::optional<std::size_t> first_step_below(const Trace& t, double threshold,
                                                   std::size_t limit) {
  for (std::size_t i = 0; i < std::min(limit, t.records.size()); ++i) {
    if (t.records[i].loss <= threshold) return t.records[i].step;
  }
  return std::nullopt;
}

inline ComparisonReport compare_trajectories(const std::map<std::string, Trace>& traces,
                                             std::span<const double> thresholds) {
  ComparisonReport report;
  if (traces.empty()) return report;
  std::size_t common = std::numeric_limits<std::size_t>::max();
  std::size_t longest = 0;
  for (const auto& [label, t] : traces) {
    common = std::min(common, t.records.size());
    longest = std::max(longest, t.records.size());
  }
  report.common_steps = common;
  report.length_mismatch = common != longest;

  for (double thr : thresholds) {
    ThresholdResult tr;
    tr.threshold = thr;
    for (const auto& [label, t] : traces) tr.order.emplace_back(label, first_step_below(t, thr, common));
    // map iteration gives label order, stable_sort keeps it for ties
    std::stable_sort(tr.order.begin(), tr.order.end(), [](const auto& a, const auto& b) {
      if (a.second.has_value() != b.second.has_value()) return a.second.has_value();
      return a.second.has_value() && *a.second < *b.second;
    });
    if (!tr.order.empty() && tr.order.front().second &&
        (tr.order.size() == 1 || tr.order[1].second != tr.order.front().second)) {
      tr.winner = tr.order.front().first;
    }
    report.thresholds.push_back(std::move(tr));
  }

  for (const auto& [label, t] : traces) {
    const double final_loss =
        common == 0 ? std::numeric_limits<double>::quiet_NaN() : t.records[common - 1].loss;
    report.final_ranking.emplace_back(label, final_loss);
  }
  std::stable_sort(report.final_ranking.begin(), report.final_ranking.end(),
                   [](const auto& a, const auto& b) {
                     const bool fa = std::isfinite(a.second), fb = std::isfinite(b.second);
                     if (fa != fb) return fa;
                     return fa && a.second < b.second;
                   });
  return report;
}

}  // namespace masopt
