// Flat parameter/gradient vectors and the few elementwise operations the
// optimizers need. Everything is 64-bit floating point.
#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace masopt {

/// Thrown when two vectors that must agree in length do not.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a NaN or infinity shows up where finite values are required.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown for out-of-range hyperparameters and other bad arguments.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-length vector of doubles. The tag keeps parameters and gradients
/// from being mixed up by accident; the length is set at construction and
/// there is no way to resize afterwards.
template <class Tag>
class BasicVector {
 public:
  BasicVector() = default;
  explicit BasicVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  BasicVector(std::initializer_list<double> init) : values_(init) {}
  explicit BasicVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const BasicVector&) const = default;

 private:
  std::vector<double> values_;
};

struct ParamTag;
struct GradTag;

using ParamVector = BasicVector<ParamTag>;
using GradVector = BasicVector<GradTag>;

template <class A, class B>
void require_same_size(const BasicVector<A>& a, const BasicVector<B>& b,
                       const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

template <class Tag>
bool all_finite(const BasicVector<Tag>& v) noexcept {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

/// y + alpha * x, elementwise. Inputs are left untouched.
inline ParamVector axpy(double alpha, const GradVector& x, const ParamVector& y) {
  require_same_size(x, y, "axpy");
  if (!std::isfinite(alpha)) throw NumericError("axpy: non-finite scale");
  ParamVector out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + alpha * x[i];
  return out;
}

template <class Tag>
double norm2(const BasicVector<Tag>& x) {
  if (x.empty()) throw DimensionError("norm2: empty vector");
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum);
}

/// Euclidean distance between two parameter vectors.
inline double distance(const ParamVector& a, const ParamVector& b) {
  require_same_size(a, b, "distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace masopt
