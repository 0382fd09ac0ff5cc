#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include "masopt/dataset.hpp"
#include "masopt/mlp.hpp"

namespace masopt {
namespace {

std::shared_ptr<const SyntheticDataset> small_data(std::size_t n, std::size_t f, std::size_t c,
                                                   std::uint64_t seed = 4,
                                                   bool random_labels = false) {
  DatasetSpec s;
  s.samples = n;
  s.features = f;
  s.classes = c;
  s.seed = seed;
  s.random_labels = random_labels;
  return std::make_shared<const SyntheticDataset>(generate_dataset(s));
}

// Naive forward pass written straight from the model definition:
// h = tanh(W1 x + b1), z = W2 h + b2, loss = mean(-log softmax(z)[y]).
double naive_loss(const MlpProblem& p, const ParamVector& flat) {
  const MlpWeights w = unflatten(p.shape(), flat);
  const auto& s = p.shape();
  double total = 0.0;
  for (std::size_t idx : p.split().train) {
    const auto x = p.dataset().row(idx);
    std::vector<double> h(s.hidden);
    for (std::size_t j = 0; j < s.hidden; ++j) {
      double a = w.b1[j];
      for (std::size_t i = 0; i < s.inputs; ++i) a += w.w1[j * s.inputs + i] * x[i];
      h[j] = std::tanh(a);
    }
    std::vector<double> z(s.classes);
    for (std::size_t c = 0; c < s.classes; ++c) {
      z[c] = w.b2[c];
      for (std::size_t j = 0; j < s.hidden; ++j) z[c] += w.w2[c * s.hidden + j] * h[j];
    }
    double denom = 0.0;
    for (double v : z) denom += std::exp(v);
    total += -(z[static_cast<std::size_t>(p.dataset().labels[idx])] - std::log(denom));
  }
  return total / static_cast<double>(p.split().train.size());
}

TEST(Dataset, BalancedClasses) {
  const auto d = small_data(601, 5, 3);
  std::map<int, int> counts;
  for (int l : d->labels) ++counts[l];
  ASSERT_EQ(counts.size(), 3u);
  EXPECT_EQ(counts[0], 201);
  EXPECT_EQ(counts[1], 200);
  EXPECT_EQ(counts[2], 200);
  EXPECT_EQ(d->inputs.size(), 601u * 5u);
}

TEST(Dataset, Deterministic) {
  EXPECT_EQ(small_data(100, 4, 3, 7)->inputs, small_data(100, 4, 3, 7)->inputs);
  EXPECT_EQ(small_data(100, 4, 3, 7)->labels, small_data(100, 4, 3, 7)->labels);
  EXPECT_NE(small_data(100, 4, 3, 7)->inputs, small_data(100, 4, 3, 8)->inputs);
}

TEST(Dataset, RejectsDegenerateSpecs) {
  DatasetSpec s;
  s.samples = 0;
  EXPECT_THROW(generate_dataset(s), ArgumentError);
  s = {};
  s.classes = 1;
  EXPECT_THROW(generate_dataset(s), ArgumentError);
}

TEST(Dataset, SplitPartitionsSamples) {
  const DataSplit s = split_dataset(100, 0.8, 3);
  EXPECT_EQ(s.train.size(), 80u);
  EXPECT_EQ(s.test.size(), 20u);
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(100);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  EXPECT_EQ(all, expect);
  EXPECT_THROW(split_dataset(10, 1.0, 0), ArgumentError);
}

TEST(Dataset, CsvExport) {
  const auto d = small_data(4, 2, 2);
  std::ostringstream out;
  write_dataset_csv(out, *d);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x0,x1,label");
  int rows = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    EXPECT_EQ(std::stod(line.substr(0, c1)), d->row(rows)[0]);
    EXPECT_EQ(std::stoi(line.substr(c2 + 1)), d->labels[rows]);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  std::vector<double> a{1.0, 2.0, 3.0}, b{1001.0, 1002.0, 1003.0};
  const double lse = softmax_inplace(a);
  softmax_inplace(b);
  EXPECT_NEAR(a[0] + a[1] + a[2], 1.0, 1e-15);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  EXPECT_NEAR(lse, std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0)), 1e-14);
}

TEST(Weights, FlattenRoundTrip) {
  const MlpShape s{3, 4, 2};
  ParamVector p(s.param_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i) * 0.5;
  const MlpWeights w = unflatten(s, p);
  EXPECT_EQ(w.w1.size(), 12u);
  EXPECT_EQ(w.b1.size(), 4u);
  EXPECT_EQ(w.w2.size(), 8u);
  EXPECT_EQ(w.b2.size(), 2u);
  EXPECT_EQ(w.b1[0], 6.0);
  EXPECT_EQ(flatten(w), p);
  EXPECT_THROW(unflatten(s, ParamVector(3)), DimensionError);
}

TEST(Mlp, LossMatchesNaiveForwardPass) {
  const auto prob = make_mlp_problem(small_data(30, 4, 3), 5);
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const ParamVector w = prob->initial_point(rng);
    EXPECT_NEAR(prob->loss(w), naive_loss(*prob, w), 1e-12);
  }
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const auto data = small_data(10, 4, 3);
  const MlpProblem prob(data, split_dataset(10, 0.8, 1), 5);
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    ParamVector w = prob.initial_point(rng);
    for (double& x : w) x += rng.normal(0.0, 0.3);  // non-zero biases too
    const GradVector an = prob.gradient(w);
    const GradVector fd = finite_diff_grad(prob, w);
    EXPECT_LE(max_relative_error(an, fd), 1e-5);
    GradVector diff(an.size());
    for (std::size_t i = 0; i < an.size(); ++i) diff[i] = an[i] - fd[i];
    EXPECT_LE(norm2(diff) / std::max(norm2(fd), 1e-12), 1e-6);
  }
}

TEST(Mlp, BatchGradientMatchesFiniteDifferences) {
  const auto data = small_data(20, 3, 3);
  const MlpProblem prob(data, split_dataset(20, 0.5, 1), 4);
  Rng rng(6);
  const ParamVector w = prob.initial_point(rng);
  const std::vector<std::size_t> batch{0, 3, 7};
  const auto lg = prob.batch_loss_and_gradient(w, batch);
  // FD over the same batch
  GradVector fd(w.size());
  ParamVector probe = w;
  const double h = 1e-5;
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + h;
    const double up = prob.batch_loss_and_gradient(probe, batch).loss;
    probe[i] = w[i] - h;
    const double down = prob.batch_loss_and_gradient(probe, batch).loss;
    probe[i] = w[i];
    fd[i] = (up - down) / (2 * h);
  }
  EXPECT_LE(max_relative_error(lg.grad, fd), 1e-5);
  const std::vector<std::size_t> bad{10};
  EXPECT_THROW(prob.batch_loss_and_gradient(w, bad), ArgumentError);
}

TEST(Mlp, FullBatchEqualsWholeTrainSplit) {
  const auto prob = make_mlp_problem(small_data(40, 3, 2), 3);
  Rng rng(8);
  const ParamVector w = prob->initial_point(rng);
  std::vector<std::size_t> all(prob->sample_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto b = prob->batch_loss_and_gradient(w, all);
  EXPECT_NEAR(b.loss, prob->loss(w), 1e-14);
  EXPECT_LE(max_relative_error(b.grad, prob->gradient(w)), 1e-14);
}

TEST(Mlp, RandomLabelsStartNearChance) {
  const auto prob = make_mlp_problem(small_data(600, 8, 3, 9, true), 16);
  Rng rng(1);
  const double l = prob->loss(prob->initial_point(rng));
  EXPECT_NEAR(l, std::log(3.0), 0.1 * std::log(3.0));
}

TEST(Mlp, PredictIsDistribution) {
  const auto prob = make_mlp_problem(small_data(30, 4, 3), 5);
  Rng rng(3);
  const ParamVector w = prob->initial_point(rng);
  const auto probs = prob->predict(w, 0);
  ASSERT_EQ(probs.size(), 3u);
  EXPECT_NEAR(probs[0] + probs[1] + probs[2], 1.0, 1e-15);
  const double acc = prob->test_accuracy(w);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 100.0);
}

TEST(Mlp, InitIsDeterministicAndBiasesZero) {
  const auto prob = make_mlp_problem(small_data(30, 4, 3), 5);
  Rng a(3), b(3);
  const ParamVector wa = prob->initial_point(a);
  EXPECT_EQ(wa, prob->initial_point(b));
  const MlpWeights w = unflatten(prob->shape(), wa);
  for (double x : w.b1) EXPECT_EQ(x, 0.0);
  for (double x : w.b2) EXPECT_EQ(x, 0.0);
  for (double x : w.w1) EXPECT_LE(std::abs(x), 0.5);
}

TEST(Mlp, SplitIsFixedByDataSeed) {
  const auto d = small_data(50, 3, 2, 11);
  EXPECT_EQ(make_mlp_problem(d, 4)->split().test, make_mlp_problem(d, 4)->split().test);
  EXPECT_EQ(make_mlp_problem(d, 4)->split().train.size(), 40u);
}

TEST(Mlp, RejectsBadConstruction) {
  const auto d = small_data(10, 2, 2);
  EXPECT_THROW(MlpProblem(d, split_dataset(10, 0.5, 0), 0), ArgumentError);
  EXPECT_THROW(MlpProblem(nullptr, DataSplit{}, 3), ArgumentError);
}

}  // namespace
}  // namespace masopt
