// Differentiable objectives: the three toy surfaces, random quadratics, and
// a central-difference gradient oracle.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "masopt/rng.hpp"
#include "masopt/vector.hpp"

namespace masopt {

struct LossAndGrad {
  double loss = 0.0;
  GradVector grad;
};

/// A differentiable objective. Immutable once built, so one instance can be
/// shared by concurrent runs.
///
/// Batched problems report sample_count() > 0 and answer
/// batch_loss_and_gradient() for a subset of sample positions; loss() and
/// gradient() always cover the full data.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual double loss(const ParamVector& w) const = 0;
  virtual GradVector gradient(const ParamVector& w) const = 0;

  virtual LossAndGrad loss_and_gradient(const ParamVector& w) const {
    return {loss(w), gradient(w)};
  }

  /// Starting point. Deterministic problems ignore the rng.
  virtual ParamVector initial_point(Rng& rng) const = 0;

  virtual std::size_t sample_count() const { return 0; }
  bool batched() const { return sample_count() > 0; }

  virtual LossAndGrad batch_loss_and_gradient(const ParamVector& w,
                                              std::span<const std::size_t> batch) const {
    (void)batch;
    return loss_and_gradient(w);
  }

 protected:
  void check_dim(const ParamVector& w) const {
    if (w.size() != dim()) {
      throw DimensionError(name() + ": expected " + std::to_string(dim()) +
                           " parameters, got " + std::to_string(w.size()));
    }
  }
};

using ProblemPtr = std::shared_ptr<const Problem>;

// ---------------------------------------------------------------------------

enum class ToySurfaceForm {
  /// sum_i (w1 * w2 * x_i - y_i)^2, minimised on the hyperbola w1 * w2 = 2.
  kSquaredError,
  /// sum_i (w1 * w2 * x_i - y_i^2), linear in w1 * w2 and unbounded below.
  /// Kept for inspection only.
  kLiteral,
};

/// Two-weight model p_i = w1 * (w2 * x_i) fitted to x = [1, 2], y = [2, 4].
class FactoredSurface final : public Problem {
 public:
  static constexpr double kX[2] = {1.0, 2.0};
  static constexpr double kY[2] = {2.0, 4.0};

  explicit FactoredSurface(ToySurfaceForm form = ToySurfaceForm::kSquaredError,
                           ParamVector start = {1.25, 1.5})
      : form_(form), start_(std::move(start)) {
    check_dim(start_);
  }

  std::string name() const override {
    return form_ == ToySurfaceForm::kSquaredError ? "factored" : "factored_literal";
  }
  std::size_t dim() const override { return 2; }
  ToySurfaceForm form() const noexcept { return form_; }

  double loss(const ParamVector& w) const override {
    check_dim(w);
    double total = 0.0;
    for (int i = 0; i < 2; ++i) {
      const double p = w[0] * (w[1] * kX[i]);
      if (form_ == ToySurfaceForm::kSquaredError) {
        const double r = p - kY[i];
        total += r * r;
      } else {
        total += p - kY[i] * kY[i];
      }
    }
    return total;
  }

  GradVector gradient(const ParamVector& w) const override {
    check_dim(w);
    GradVector g(2);
    for (int i = 0; i < 2; ++i) {
      // dL/dp_i
      const double outer =
          form_ == ToySurfaceForm::kSquaredError ? 2.0 * (w[0] * w[1] * kX[i] - kY[i]) : 1.0;
      g[0] += outer * w[1] * kX[i];
      g[1] += outer * w[0] * kX[i];
    }
    return g;
  }

  ParamVector initial_point(Rng&) const override { return start_; }

 private:
  ToySurfaceForm form_;
  ParamVector start_;
};

/// z = (a - y)^2 + b (y - x^2)^2 over (x, y). Note the first term uses y,
/// not the textbook (a - x). Minimum at y = a, x = +-sqrt(a).
class Rosenbrock final : public Problem {
 public:
  Rosenbrock(double a = 1.0, double b = 100.0, ParamVector start = {3.0, 1.0})
      : a_(a), b_(b), start_(std::move(start)) {
    if (!(b > 0.0)) throw ArgumentError("rosenbrock: b must be > 0");
    check_dim(start_);
  }

  std::string name() const override { return "rosenbrock"; }
  std::size_t dim() const override { return 2; }
  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }

  double loss(const ParamVector& w) const override {
    check_dim(w);
    const double x = w[0], y = w[1];
    const double t1 = a_ - y;
    const double t2 = y - x * x;
    return t1 * t1 + b_ * t2 * t2;
  }

  GradVector gradient(const ParamVector& w) const override {
    check_dim(w);
    const double x = w[0], y = w[1];
    const double t2 = y - x * x;
    return GradVector{-4.0 * b_ * x * t2, -2.0 * (a_ - y) + 2.0 * b_ * t2};
  }

  ParamVector initial_point(Rng&) const override { return start_; }

 private:
  double a_;
  double b_;
  ParamVector start_;
};

/// z = |x| / 10 + |y|. The subgradient of |t| at t = 0 is taken as 0.
class L1Cone final : public Problem {
 public:
  explicit L1Cone(ParamVector start = {3.0, 2.0}) : start_(std::move(start)) {
    check_dim(start_);
  }

  std::string name() const override { return "l1_cone"; }
  std::size_t dim() const override { return 2; }

  double loss(const ParamVector& w) const override {
    check_dim(w);
    return std::abs(w[0]) / 10.0 + std::abs(w[1]);
  }

  GradVector gradient(const ParamVector& w) const override {
    check_dim(w);
    return GradVector{sign(w[0]) / 10.0, sign(w[1])};
  }

  ParamVector initial_point(Rng&) const override { return start_; }

 private:
  static double sign(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

  ParamVector start_;
};

/// loss = 0.5 (w - w*)^T A (w - w*), A symmetric positive definite.
class Quadratic final : public Problem {
 public:
  /// `matrix` is row-major dim x dim and must be symmetric.
  Quadratic(std::vector<double> matrix, ParamVector minimizer, ParamVector start)
      : a_(std::move(matrix)), minimizer_(std::move(minimizer)), start_(std::move(start)) {
    const std::size_t n = minimizer_.size();
    if (n == 0) throw ArgumentError("quadratic: dim must be >= 1");
    if (a_.size() != n * n) throw DimensionError("quadratic: matrix is not dim x dim");
    require_same_size(minimizer_, start_, "quadratic start");
  }

  std::string name() const override { return "quadratic"; }
  std::size_t dim() const override { return minimizer_.size(); }
  const ParamVector& minimizer() const noexcept { return minimizer_; }
  double matrix(std::size_t r, std::size_t c) const { return a_[r * dim() + c]; }

  double loss(const ParamVector& w) const override {
    check_dim(w);
    const std::size_t n = dim();
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dr = w[r] - minimizer_[r];
      double row = 0.0;
      for (std::size_t c = 0; c < n; ++c) row += a_[r * n + c] * (w[c] - minimizer_[c]);
      total += dr * row;
    }
    // round-off can leave a tiny negative for near-minimal w
    return std::max(0.0, 0.5 * total);
  }

  GradVector gradient(const ParamVector& w) const override {
    check_dim(w);
    const std::size_t n = dim();
    GradVector g(n);
    for (std::size_t r = 0; r < n; ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < n; ++c) row += a_[r * n + c] * (w[c] - minimizer_[c]);
      g[r] = row;
    }
    return g;
  }

  ParamVector initial_point(Rng&) const override { return start_; }

 private:
  std::vector<double> a_;
  ParamVector minimizer_;
  ParamVector start_;
};

/// Random well-conditioned quadratic: A = B^T B / dim + 0.1 I with B
/// standard normal, minimizer and start uniform in [-1, 1]^dim.
inline std::shared_ptr<const Quadratic> random_quadratic(std::size_t dim, Rng& rng) {
  if (dim < 1) throw ArgumentError("random_quadratic: dim must be >= 1");
  std::vector<double> b(dim * dim);
  for (double& x : b) x = rng.normal();
  std::vector<double> a(dim * dim);
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = r; c < dim; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += b[k * dim + r] * b[k * dim + c];
      s /= static_cast<double>(dim);
      if (r == c) s += 0.1;
      a[r * dim + c] = s;
      a[c * dim + r] = s;
    }
  }
  ParamVector minimizer(dim), start(dim);
  for (std::size_t i = 0; i < dim; ++i) minimizer[i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < dim; ++i) start[i] = rng.uniform(-1.0, 1.0);
  return std::make_shared<const Quadratic>(std::move(a), std::move(minimizer), std::move(start));
}

// ---------------------------------------------------------------------------

inline constexpr double kDefaultFiniteDiffStep = 1e-5;

/// Central differences (L(w + h e_i) - L(w - h e_i)) / 2h per coordinate.
inline GradVector finite_diff_grad(const Problem& p, const ParamVector& w,
                                   double h = kDefaultFiniteDiffStep) {
  if (!(h > 0.0)) throw ArgumentError("finite_diff_grad: step must be > 0");
  GradVector g(w.size());
  ParamVector probe = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    const double up = p.loss(probe);
    probe[i] = w[i] - h;
    const double down = p.loss(probe);
    probe[i] = w[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Largest elementwise |a - b| / max(|a|, |b|, 1).
inline double max_relative_error(const GradVector& a, const GradVector& b) {
  require_same_size(a, b, "max_relative_error");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1.0});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace masopt
