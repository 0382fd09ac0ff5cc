// SGD, ADAM and MAS (Mixing ADAM and SGD) update rules.
//
// Each optimizer is split the same way: a delta_* function that advances the
// optimizer state and returns the raw increment, and a *_step function that
// scales the increment by the learning rate and applies it. MAS calls both
// delta functions with the same gradient and combines them as
//
//   merged = lambda_s * v_sgd + lambda_a * d_adam
//   eta_m  = lambda_s * eta   + lambda_a * eta_a
//   w'     = w - eta_m * merged
//
// ADAM uses a constant bias correction: d = sqrt(1 - beta2) * m / (sqrt(v) + eps)
// with effective learning rate eta_a = eta / (1 - beta1). There is no per-step
// 1 - beta^k correction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>

#include "masopt/vector.hpp"

namespace masopt {

inline GradVector apply_weight_decay(const GradVector& grad, const ParamVector& w,
                                     double gamma) {
  require_same_size(grad, w, "apply_weight_decay");
  if (!(gamma >= 0.0)) throw ArgumentError("weight decay must be >= 0");
  GradVector out(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) out[i] = grad[i] + w[i] * gamma;
  return out;
}

// ---------------------------------------------------------------------------
// SGD with weight decay, momentum, dampening and Nesterov.

struct SgdHyper {
  double eta = 1e-3;
  double gamma = 0.0;
  double mu = 0.0;
  double dampening = 0.0;
  bool nesterov = false;
  /// Permits nesterov together with a nonzero dampening. Off by default.
  bool allow_nesterov_dampening = false;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("sgd: eta must be > 0");
    if (!(gamma >= 0.0)) throw ArgumentError("sgd: weight decay must be >= 0");
    if (!(mu >= 0.0 && mu < 1.0)) throw ArgumentError("sgd: momentum must be in [0, 1)");
    if (!(dampening >= 0.0 && dampening < 1.0)) {
      throw ArgumentError("sgd: dampening must be in [0, 1)");
    }
    if (nesterov && !(mu > 0.0)) throw ArgumentError("sgd: nesterov requires momentum > 0");
    if (nesterov && dampening != 0.0 && !allow_nesterov_dampening) {
      throw ArgumentError("sgd: nesterov requires zero dampening");
    }
  }

  bool operator==(const SgdHyper&) const = default;
};

struct SgdState {
  GradVector v;       // momentum buffer, zero until the first momentum step
  std::size_t k = 0;  // steps taken

  SgdState() = default;
  explicit SgdState(std::size_t dim) : v(dim) {}
};

/// Advances the SGD state and returns v_{n_k}.
///
/// With momentum the first step loads the buffer with the decayed gradient
/// as-is (no (1 - d) factor); later steps use v * mu + g * (1 - d). With
/// nesterov the returned increment is g + v * mu while the buffer keeps v.
/// With mu == 0 the decayed gradient is returned and the buffer stays zero.
inline GradVector delta_sgd(SgdState& state, const ParamVector& w,
                            const GradVector& grad, const SgdHyper& h) {
  require_same_size(grad, w, "delta_sgd");
  require_same_size(state.v, w, "delta_sgd state");
  if (!all_finite(grad)) throw NumericError("delta_sgd: non-finite gradient");

  GradVector g = apply_weight_decay(grad, w, h.gamma);
  GradVector out;
  if (h.mu != 0.0) {
    if (state.k == 0) {
      state.v = g;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) {
        state.v[i] = state.v[i] * h.mu + g[i] * (1.0 - h.dampening);
      }
    }
    if (h.nesterov) {
      out = GradVector(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] + state.v[i] * h.mu;
    } else {
      out = state.v;
    }
  } else {
    out = std::move(g);
  }
  ++state.k;
  return out;
}

// ---------------------------------------------------------------------------
// ADAM with optional AMSGrad.

/// Where epsilon enters the ADAM increment.
enum class EpsilonPlacement {
  /// d = sqrt(1 - b2) * m / (sqrt(v) + eps). Canonical.
  kIncrement,
  /// denom = sqrt(v) / (sqrt(1 - b2) + eps); d = m / denom. Compatibility
  /// form; d is defined as 0 when v is exactly 0.
  kDenominator,
};

struct AdamHyper {
  double eta = 1e-3;
  double gamma = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool amsgrad = false;
  EpsilonPlacement epsilon_placement = EpsilonPlacement::kIncrement;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("adam: eta must be > 0");
    if (!(gamma >= 0.0)) throw ArgumentError("adam: weight decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ArgumentError("adam: beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ArgumentError("adam: beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw ArgumentError("adam: eps must be > 0");
  }

  /// eta / (1 - beta1)
  double effective_lr() const { return eta / (1.0 - beta1); }

  bool operator==(const AdamHyper&) const = default;
};

struct AdamState {
  GradVector m;
  GradVector va;
  GradVector vhat;  // running max of va, only advanced under amsgrad
  std::size_t k = 0;

  AdamState() = default;
  explicit AdamState(std::size_t dim) : m(dim), va(dim), vhat(dim) {}
};

struct AdamIncrement {
  GradVector d;
  double eta_a = 0.0;
};

/// Advances the ADAM moments and returns (d_k, eta_a).
inline AdamIncrement delta_adam(AdamState& state, const ParamVector& w,
                                const GradVector& grad, const AdamHyper& h) {
  require_same_size(grad, w, "delta_adam");
  require_same_size(state.m, w, "delta_adam state");
  require_same_size(state.va, w, "delta_adam state");
  require_same_size(state.vhat, w, "delta_adam state");
  if (!all_finite(grad)) throw NumericError("delta_adam: non-finite gradient");

  const GradVector g = apply_weight_decay(grad, w, h.gamma);
  const double root_one_minus_b2 = std::sqrt(1.0 - h.beta2);

  AdamIncrement out{GradVector(g.size()), h.effective_lr()};
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = state.m[i] * h.beta1 + g[i] * (1.0 - h.beta1);
    state.va[i] = state.va[i] * h.beta2 + g[i] * g[i] * (1.0 - h.beta2);
    double second = state.va[i];
    if (h.amsgrad) {
      state.vhat[i] = std::max(state.vhat[i], state.va[i]);
      second = state.vhat[i];
    }
    if (h.epsilon_placement == EpsilonPlacement::kIncrement) {
      out.d[i] = root_one_minus_b2 * state.m[i] / (std::sqrt(second) + h.eps);
    } else {
      const double denom = std::sqrt(second) / (root_one_minus_b2 + h.eps);
      out.d[i] = denom == 0.0 ? 0.0 : state.m[i] / denom;
    }
  }
  ++state.k;
  return out;
}

// ---------------------------------------------------------------------------
// MAS

/// Tolerance on lambda_a + lambda_s == 1 for constrained mixing weights.
inline constexpr double kLambdaSumTolerance = 1e-12;

struct MasHyper {
  double lambda_a = 0.5;
  double lambda_s = 0.5;
  SgdHyper sgd;
  AdamHyper adam;
  /// Lifts the lambda_a + lambda_s == 1 requirement. Research use only.
  bool unconstrained = false;

  /// Mixing weights plus one learning rate shared by both components.
  static MasHyper shared(double eta, double lambda_a, double lambda_s,
                         SgdHyper sgd = {}, AdamHyper adam = {}) {
    sgd.eta = eta;
    adam.eta = eta;
    MasHyper h{lambda_a, lambda_s, sgd, adam, false};
    h.validate();
    return h;
  }

  static MasHyper unconstrained_mix(double lambda_a, double lambda_s,
                                    SgdHyper sgd, AdamHyper adam) {
    MasHyper h{lambda_a, lambda_s, sgd, adam, true};
    h.validate();
    return h;
  }

  void validate() const {
    if (!(lambda_a >= 0.0) || !(lambda_s >= 0.0)) {
      throw ArgumentError("mas: lambdas must be >= 0");
    }
    if (!unconstrained && std::abs(lambda_a + lambda_s - 1.0) > kLambdaSumTolerance) {
      throw ArgumentError("mas: lambda_a + lambda_s must equal 1");
    }
    sgd.validate();
    adam.validate();
  }

  bool operator==(const MasHyper&) const = default;
};

struct MasState {
  SgdState sgd;
  AdamState adam;

  MasState() = default;
  explicit MasState(std::size_t dim) : sgd(dim), adam(dim) {}
};

/// What a step actually did: new = old - effective_lr * raw_increment and
/// step_direction = effective_lr * raw_increment.
struct StepReport {
  GradVector step_direction;
  double effective_lr = 0.0;
  GradVector raw_increment;
};

/// MAS step report with the two component increments and learning rates.
struct MasStepReport : StepReport {
  GradVector sgd_increment;   // v_{n_k}
  GradVector adam_increment;  // d_k
  double sgd_lr = 0.0;        // eta
  double adam_lr = 0.0;       // eta_a
};

template <class Report>
struct BasicStepResult {
  ParamVector params;
  Report report;
};

using StepResult = BasicStepResult<StepReport>;
using MasStepResult = BasicStepResult<MasStepReport>;

namespace detail {

inline void apply_increment(const ParamVector& w, double lr, const GradVector& raw,
                            ParamVector& out, StepReport& report) {
  out = ParamVector(w.size());
  report.step_direction = GradVector(w.size());
  report.effective_lr = lr;
  for (std::size_t i = 0; i < w.size(); ++i) {
    report.step_direction[i] = lr * raw[i];
    out[i] = w[i] - report.step_direction[i];
  }
}

}  // namespace detail

inline StepResult sgd_step(SgdState& state, const ParamVector& w,
                           const GradVector& grad, const SgdHyper& h) {
  StepResult r;
  r.report.raw_increment = delta_sgd(state, w, grad, h);
  detail::apply_increment(w, h.eta, r.report.raw_increment, r.params, r.report);
  return r;
}

inline StepResult adam_step(AdamState& state, const ParamVector& w,
                            const GradVector& grad, const AdamHyper& h) {
  StepResult r;
  AdamIncrement inc = delta_adam(state, w, grad, h);
  r.report.raw_increment = std::move(inc.d);
  detail::apply_increment(w, inc.eta_a, r.report.raw_increment, r.params, r.report);
  return r;
}

/// One MAS step. The same gradient feeds both components; the ADAM state is
/// advanced first, then SGD, then the weighted increments are merged.
inline MasStepResult mas_step(MasState& state, const ParamVector& w,
                              const GradVector& grad, const MasHyper& h) {
  MasStepResult r;
  AdamIncrement adam = delta_adam(state.adam, w, grad, h.adam);
  GradVector sgd = delta_sgd(state.sgd, w, grad, h.sgd);

  GradVector merged(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    merged[i] = h.lambda_s * sgd[i] + h.lambda_a * adam.d[i];
  }
  const double eta_m = h.lambda_s * h.sgd.eta + h.lambda_a * adam.eta_a;

  r.report.raw_increment = std::move(merged);
  detail::apply_increment(w, eta_m, r.report.raw_increment, r.params, r.report);
  r.report.sgd_increment = std::move(sgd);
  r.report.adam_increment = std::move(adam.d);
  r.report.sgd_lr = h.sgd.eta;
  r.report.adam_lr = adam.eta_a;
  return r;
}

// ---------------------------------------------------------------------------
// Stateful wrappers: hyperparameters validated once, state owned.

class Sgd {
 public:
  Sgd(SgdHyper h, std::size_t dim) : hyper_(h), state_(dim) { hyper_.validate(); }

  StepResult step(const ParamVector& w, const GradVector& grad) {
    return sgd_step(state_, w, grad, hyper_);
  }

  const SgdHyper& hyper() const noexcept { return hyper_; }
  const SgdState& state() const noexcept { return state_; }

 private:
  SgdHyper hyper_;
  SgdState state_;
};

class Adam {
 public:
  Adam(AdamHyper h, std::size_t dim) : hyper_(h), state_(dim) { hyper_.validate(); }

  StepResult step(const ParamVector& w, const GradVector& grad) {
    return adam_step(state_, w, grad, hyper_);
  }

  const AdamHyper& hyper() const noexcept { return hyper_; }
  const AdamState& state() const noexcept { return state_; }

 private:
  AdamHyper hyper_;
  AdamState state_;
};

class Mas {
 public:
  Mas(MasHyper h, std::size_t dim) : hyper_(h), state_(dim) { hyper_.validate(); }

  MasStepResult step(const ParamVector& w, const GradVector& grad) {
    return mas_step(state_, w, grad, hyper_);
  }

  const MasHyper& hyper() const noexcept { return hyper_; }
  const MasState& state() const noexcept { return state_; }

 private:
  MasHyper hyper_;
  MasState state_;
};

/// Any of the three, stepped through a common interface.
class AnyOptimizer {
 public:
  template <class Opt>
  explicit AnyOptimizer(Opt opt) : impl_(std::move(opt)) {}

  StepResult step(const ParamVector& w, const GradVector& grad) {
    return std::visit(
        [&](auto& opt) -> StepResult {
          auto r = opt.step(w, grad);
          return StepResult{std::move(r.params), static_cast<StepReport&&>(r.report)};
        },
        impl_);
  }

  std::string name() const {
    if (std::holds_alternative<Sgd>(impl_)) return "SGD";
    if (std::holds_alternative<Adam>(impl_)) return "Adam";
    return "MAS";
  }

 private:
  std::variant<Sgd, Adam, Mas> impl_;
};

}  // namespace masopt
