#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "masopt/problems.hpp"

namespace masopt {
namespace {

constexpr int kPoints = 100;

TEST(Factored, KnownValues) {
  const FactoredSurface f;
  EXPECT_DOUBLE_EQ(f.loss(ParamVector{0.0, 0.0}), 20.0);
  EXPECT_DOUBLE_EQ(f.loss(ParamVector{1.0, 2.0}), 0.0);
  EXPECT_DOUBLE_EQ(f.loss(ParamVector{4.0, 0.5}), 0.0);
  EXPECT_EQ(f.gradient(ParamVector{2.0, 1.0}), (GradVector{0.0, 0.0}));
  // p = (1, 2), residuals (-1, -2): dL/dw1 = 2*(-1)*1 + 2*(-2)*2
  EXPECT_EQ(f.gradient(ParamVector{1.0, 1.0}), (GradVector{-10.0, -10.0}));
  Rng unused(0);
  EXPECT_EQ(f.initial_point(unused), (ParamVector{1.25, 1.5}));
}

TEST(Factored, LiteralFormIsLinearInProduct) {
  const FactoredSurface f(ToySurfaceForm::kLiteral);
  EXPECT_DOUBLE_EQ(f.loss(ParamVector{0.0, 0.0}), -20.0);
  EXPECT_DOUBLE_EQ(f.loss(ParamVector{1.0, 1.0}), 3.0 - 20.0);
  EXPECT_EQ(f.gradient(ParamVector{2.0, 5.0}), (GradVector{15.0, 6.0}));
}

TEST(Rosenbrock, KnownValues) {
  const Rosenbrock r;
  EXPECT_DOUBLE_EQ(r.loss(ParamVector{3.0, 1.0}), 6400.0);
  EXPECT_DOUBLE_EQ(r.loss(ParamVector{1.0, 1.0}), 0.0);
  EXPECT_DOUBLE_EQ(r.loss(ParamVector{-1.0, 1.0}), 0.0);
  EXPECT_EQ(r.gradient(ParamVector{1.0, 1.0}), (GradVector{0.0, 0.0}));
  // dz/dx = -4 b x (y - x^2) = -400*3*(-8), dz/dy = -2(a - y) + 2b(y - x^2)
  EXPECT_EQ(r.gradient(ParamVector{3.0, 1.0}), (GradVector{9600.0, -1600.0}));
}

TEST(Rosenbrock, RejectsNonPositiveB) {
  EXPECT_THROW(Rosenbrock(1.0, 0.0), ArgumentError);
  EXPECT_THROW(Rosenbrock(1.0, -1.0), ArgumentError);
}

TEST(L1Cone, KnownValues) {
  const L1Cone c;
  EXPECT_DOUBLE_EQ(c.loss(ParamVector{3.0, 2.0}), 2.3);
  EXPECT_EQ(c.loss(ParamVector{0.0, 0.0}), 0.0);
  EXPECT_EQ(c.gradient(ParamVector{-3.0, 2.0}), (GradVector{-0.1, 1.0}));
  EXPECT_EQ(c.gradient(ParamVector{0.0, 0.0}), (GradVector{0.0, 0.0}));
}

TEST(Quadratic, OneDimensional) {
  const Quadratic q({2.0}, ParamVector{0.0}, ParamVector{3.0});
  EXPECT_DOUBLE_EQ(q.loss(ParamVector{3.0}), 9.0);
  EXPECT_EQ(q.gradient(ParamVector{3.0}), (GradVector{6.0}));
}

TEST(Quadratic, ZeroAtMinimizerAndPositiveElsewhere) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto q = random_quadratic(1 + rng.below(6), rng);
    EXPECT_EQ(q->loss(q->minimizer()), 0.0);
    for (double g : q->gradient(q->minimizer())) EXPECT_EQ(g, 0.0);
    ParamVector w = q->minimizer();
    w[0] += 0.5;
    EXPECT_GT(q->loss(w), 0.0);
    for (std::size_t r = 0; r < q->dim(); ++r) {
      for (std::size_t c = 0; c < q->dim(); ++c) EXPECT_EQ(q->matrix(r, c), q->matrix(c, r));
    }
  }
}

TEST(Quadratic, RandomIsDeterministic) {
  Rng a(9), b(9);
  const auto qa = random_quadratic(5, a);
  const auto qb = random_quadratic(5, b);
  EXPECT_EQ(qa->minimizer(), qb->minimizer());
  Rng unused(0);
  EXPECT_EQ(qa->initial_point(unused), qb->initial_point(unused));
}

TEST(Quadratic, RejectsBadShapes) {
  EXPECT_THROW(Quadratic({1.0, 0.0}, ParamVector{0.0}, ParamVector{0.0}), DimensionError);
  EXPECT_THROW(Quadratic({}, ParamVector{}, ParamVector{}), ArgumentError);
  Rng rng(1);
  EXPECT_THROW(random_quadratic(0, rng), ArgumentError);
}

TEST(Problems, WrongDimensionThrows) {
  const Rosenbrock r;
  EXPECT_THROW(r.loss(ParamVector{1.0}), DimensionError);
  EXPECT_THROW(r.gradient(ParamVector{1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(FactoredSurface(ToySurfaceForm::kSquaredError, ParamVector{1.0}), DimensionError);
}

// Analytic gradients against central differences at random points.
void check_gradients(const Problem& p, Rng& rng, double lo, double hi, double tol) {
  for (int t = 0; t < kPoints; ++t) {
    ParamVector w(p.dim());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(lo, hi);
    const GradVector fd = finite_diff_grad(p, w);
    const GradVector an = p.gradient(w);
    ASSERT_LE(max_relative_error(an, fd), tol) << p.name() << " at point " << t;
    const auto both = p.loss_and_gradient(w);
    ASSERT_EQ(both.loss, p.loss(w));
    ASSERT_EQ(both.grad, an);
  }
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng(101);
  check_gradients(FactoredSurface(), rng, -3.0, 3.0, 1e-6);
  check_gradients(FactoredSurface(ToySurfaceForm::kLiteral), rng, -3.0, 3.0, 1e-6);
  check_gradients(Rosenbrock(), rng, -3.0, 3.0, 1e-6);
  check_gradients(Rosenbrock(2.0, 10.0), rng, -2.0, 2.0, 1e-6);
  for (int k = 0; k < 5; ++k) check_gradients(*random_quadratic(1 + k * 2, rng), rng, -2, 2, 1e-6);
}

// Away from the kinks the cone is linear, so differences are exact up to
// round-off.
TEST(Gradients, L1ConeAwayFromKinks) {
  Rng rng(102);
  const L1Cone c;
  for (int t = 0; t < kPoints; ++t) {
    ParamVector w{rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0)};
    if (rng.below(2)) w[0] = -w[0];
    if (rng.below(2)) w[1] = -w[1];
    ASSERT_LE(max_relative_error(c.gradient(w), finite_diff_grad(c, w)), 1e-8);
  }
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  EXPECT_THROW(finite_diff_grad(L1Cone(), ParamVector{1.0, 1.0}, 0.0), ArgumentError);
}

TEST(FiniteDiff, RelativeErrorUsesFloorOfOne) {
  EXPECT_DOUBLE_EQ(max_relative_error(GradVector{1e-9}, GradVector{2e-9}), 1e-9);
  EXPECT_DOUBLE_EQ(max_relative_error(GradVector{100.0}, GradVector{101.0}), 1.0 / 101.0);
}

}  // namespace
}  // namespace masopt
