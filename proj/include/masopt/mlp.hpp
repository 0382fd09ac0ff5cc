// One-hidden-layer tanh MLP with softmax cross-entropy, trained on a
// SyntheticDataset. Gradients are hand-written backprop.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "masopt/dataset.hpp"
#include "masopt/problems.hpp"

namespace masopt {

struct MlpShape {
  std::size_t inputs = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;

  std::size_t param_count() const noexcept {
    return hidden * inputs + hidden + classes * hidden + classes;
  }
};

/// Unpacked weights. Flat layout is w1 (hidden x inputs, row-major), b1,
/// w2 (classes x hidden, row-major), b2.
struct MlpWeights {
  MlpShape shape;
  std::vector<double> w1, b1, w2, b2;

  bool operator==(const MlpWeights& o) const {
    return w1 == o.w1 && b1 == o.b1 && w2 == o.w2 && b2 == o.b2;
  }
};

inline MlpWeights unflatten(const MlpShape& s, const ParamVector& p) {
  if (p.size() != s.param_count()) throw DimensionError("mlp: wrong parameter count");
  MlpWeights w{s, {}, {}, {}, {}};
  auto it = p.begin();
  auto take = [&it](std::vector<double>& dst, std::size_t n) {
    dst.assign(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
  };
  take(w.w1, s.hidden * s.inputs);
  take(w.b1, s.hidden);
  take(w.w2, s.classes * s.hidden);
  take(w.b2, s.classes);
  return w;
}

inline ParamVector flatten(const MlpWeights& w) {
  std::vector<double> out;
  out.reserve(w.shape.param_count());
  for (const auto* part : {&w.w1, &w.b1, &w.w2, &w.b2}) {
    out.insert(out.end(), part->begin(), part->end());
  }
  if (out.size() != w.shape.param_count()) throw DimensionError("mlp: inconsistent weights");
  return ParamVector(std::move(out));
}

/// Numerically stable softmax in place. Returns log-sum-exp of the input.
inline double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

class MlpProblem final : public Problem {
 public:
  MlpProblem(std::shared_ptr<const SyntheticDataset> data, DataSplit split,
             std::size_t hidden)
      : data_(std::move(data)), split_(std::move(split)) {
    if (!data_ || data_->size() == 0) throw ArgumentError("mlp: empty dataset");
    if (hidden < 1) throw ArgumentError("mlp: hidden must be >= 1");
    if (split_.train.empty()) throw ArgumentError("mlp: empty training split");
    shape_ = {data_->features(), hidden, data_->classes()};
  }

  std::string name() const override { return "mlp"; }
  std::size_t dim() const override { return shape_.param_count(); }
  const MlpShape& shape() const noexcept { return shape_; }
  const SyntheticDataset& dataset() const noexcept { return *data_; }
  const DataSplit& split() const noexcept { return split_; }

  std::size_t sample_count() const override { return split_.train.size(); }

  /// Weight matrices uniform in +-1/sqrt(fan_in), biases zero.
  ParamVector initial_point(Rng& rng) const override {
    MlpWeights w{shape_,
                 std::vector<double>(shape_.hidden * shape_.inputs),
                 std::vector<double>(shape_.hidden, 0.0),
                 std::vector<double>(shape_.classes * shape_.hidden),
                 std::vector<double>(shape_.classes, 0.0)};
    const double r1 = 1.0 / std::sqrt(static_cast<double>(shape_.inputs));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(shape_.hidden));
    for (double& x : w.w1) x = rng.uniform(-r1, r1);
    for (double& x : w.w2) x = rng.uniform(-r2, r2);
    return flatten(w);
  }

  /// Class probabilities for one sample.
  std::vector<double> predict(const ParamVector& p, std::size_t sample) const {
    check_dim(p);
    std::vector<double> hidden(shape_.hidden), probs(shape_.classes);
    forward(p, sample, hidden, probs);
    return probs;
  }

  double loss(const ParamVector& p) const override {
    return evaluate(p, split_.train, false).loss;
  }

  GradVector gradient(const ParamVector& p) const override {
    return evaluate(p, split_.train, true).grad;
  }

  LossAndGrad loss_and_gradient(const ParamVector& p) const override {
    return evaluate(p, split_.train, true);
  }

  /// `batch` holds positions into the training split.
  LossAndGrad batch_loss_and_gradient(const ParamVector& p,
                                      std::span<const std::size_t> batch) const override {
    std::vector<std::size_t> samples;
    samples.reserve(batch.size());
    for (std::size_t pos : batch) {
      if (pos >= split_.train.size()) throw ArgumentError("mlp: batch position out of range");
      samples.push_back(split_.train[pos]);
    }
    return evaluate(p, samples, true);
  }

  /// Fraction of `samples` classified correctly, in percent.
  double accuracy(const ParamVector& p, std::span<const std::size_t> samples) const {
    check_dim(p);
    if (samples.empty()) return 0.0;
    std::vector<double> hidden(shape_.hidden), probs(shape_.classes);
    std::size_t correct = 0;
    for (std::size_t s : samples) {
      forward(p, s, hidden, probs);
      const auto best = static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                                         probs.begin());
      if (best == data_->labels[s]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(samples.size());
  }

  double test_accuracy(const ParamVector& p) const { return accuracy(p, split_.test); }

 private:
  // Offsets into the flat parameter vector.
  std::size_t off_b1() const { return shape_.hidden * shape_.inputs; }
  std::size_t off_w2() const { return off_b1() + shape_.hidden; }
  std::size_t off_b2() const { return off_w2() + shape_.classes * shape_.hidden; }

  /// Fills hidden activations and class probabilities; returns log-sum-exp
  /// of the logits.
  double forward(const ParamVector& p, std::size_t sample, std::vector<double>& hidden,
                 std::vector<double>& probs) const {
    const auto x = data_->row(sample);
    const std::size_t nin = shape_.inputs, nh = shape_.hidden, nc = shape_.classes;
    for (std::size_t j = 0; j < nh; ++j) {
      double a = p[off_b1() + j];
      for (std::size_t f = 0; f < nin; ++f) a += p[j * nin + f] * x[f];
      hidden[j] = std::tanh(a);
    }
    for (std::size_t c = 0; c < nc; ++c) {
      double z = p[off_b2() + c];
      for (std::size_t j = 0; j < nh; ++j) z += p[off_w2() + c * nh + j] * hidden[j];
      probs[c] = z;
    }
    return softmax_inplace(probs);
  }

  LossAndGrad evaluate(const ParamVector& p, std::span<const std::size_t> samples,
                       bool want_grad) const {
    check_dim(p);
    if (samples.empty()) throw ArgumentError("mlp: empty batch");
    const std::size_t nin = shape_.inputs, nh = shape_.hidden, nc = shape_.classes;
    std::vector<double> hidden(nh), probs(nc), dhidden(nh);
    LossAndGrad out{0.0, GradVector(want_grad ? dim() : 0)};

    for (std::size_t s : samples) {
      forward(p, s, hidden, probs);
      const auto label = static_cast<std::size_t>(data_->labels[s]);
      // -log p_label, floored away from log(0)
      out.loss -= std::log(std::max(probs[label], 1e-300));
      if (!want_grad) continue;

      GradVector& g = out.grad;
      std::fill(dhidden.begin(), dhidden.end(), 0.0);
      for (std::size_t c = 0; c < nc; ++c) {
        const double dz = probs[c] - (c == label ? 1.0 : 0.0);
        g[off_b2() + c] += dz;
        for (std::size_t j = 0; j < nh; ++j) {
          g[off_w2() + c * nh + j] += dz * hidden[j];
          dhidden[j] += p[off_w2() + c * nh + j] * dz;
        }
      }
      const auto x = data_->row(s);
      for (std::size_t j = 0; j < nh; ++j) {
        const double da = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
        g[off_b1() + j] += da;
        for (std::size_t f = 0; f < nin; ++f) g[j * nin + f] += da * x[f];
      }
    }

    const double inv = 1.0 / static_cast<double>(samples.size());
    out.loss *= inv;
    for (double& v : out.grad) v *= inv;
    return out;
  }

  std::shared_ptr<const SyntheticDataset> data_;
  DataSplit split_;
  MlpShape shape_;
};

inline constexpr double kTrainFraction = 0.8;

/// MLP problem over an 80/20 split drawn from the dataset's own seed, so
/// every run seed sees the same held-out samples. Initial weights come from
/// initial_point(rng).
inline std::shared_ptr<const MlpProblem> make_mlp_problem(
    std::shared_ptr<const SyntheticDataset> data, std::size_t hidden) {
  if (!data || data->size() == 0) throw ArgumentError("mlp: empty dataset");
  DataSplit split = split_dataset(data->size(), kTrainFraction, data->spec.seed ^ 0x5eedull);
  return std::make_shared<const MlpProblem>(std::move(data), std::move(split), hidden);
}

}  // namespace masopt
