#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cab/benchfields.hpp"

using cab::State;
namespace bench = cab::bench;

namespace {

// Retyped independently of the library.
State v1_ref(double a, double b, double p) {
  return {-1.5 * a + 0.9 * b + 0.2 * a * b + 0.15 * std::sin(3 * p),
          -b - 0.7 * a + 0.1 * a * a - 0.08 * b * b + 0.1 * std::cos(2 * p)};
}
State v2_ref(double a, double b, double p) {
  const double m = 0.3 + 0.4 * (a * a + b * b);
  const double w = 3.0 + 0.2 * std::sin(p);
  return {-m * a - w * b, w * a - m * b};
}

}  // namespace

TEST(V1, Examples) {
  State e = bench::eval_v1(State{0, 0}, 0.0);
  EXPECT_DOUBLE_EQ(e[0], 0.0);
  EXPECT_DOUBLE_EQ(e[1], 0.1);
  e = bench::eval_v1(State{1, 0}, 0.0);
  EXPECT_DOUBLE_EQ(e[0], -1.5);
  EXPECT_DOUBLE_EQ(e[1], -0.5);
  e = bench::eval_v1(State{0, 1}, std::numbers::pi / 6);
  EXPECT_NEAR(e[0], 1.05, 1e-15);
  EXPECT_NEAR(e[1], -1.03, 1e-15);
}

TEST(V2, Examples) {
  State e = bench::eval_v2(State{1, 0}, 0.0);
  EXPECT_DOUBLE_EQ(e[0], -0.7);
  EXPECT_DOUBLE_EQ(e[1], 3.0);
  for (double p : {0.0, 1.3, -4.0}) {
    e = bench::eval_v2(State{0, 0}, p);
    EXPECT_EQ(e[0], 0.0);
    EXPECT_EQ(e[1], 0.0);
  }
}

TEST(Fields, MatchIndependentCopies) {
  for (double a : {-1.2, 0.0, 0.8}) {
    for (double b : {-0.5, 0.3, 2.0}) {
      for (double p : {0.05, 0.7, 2.0}) {
        const State x = bench::eval_v1(State{a, b}, p), rx = v1_ref(a, b, p);
        const State y = bench::eval_v2(State{a, b}, p), ry = v2_ref(a, b, p);
        for (int k = 0; k < 2; ++k) {
          EXPECT_NEAR(x[k], rx[k], 1e-15 * (1 + std::abs(rx[k])));
          EXPECT_NEAR(y[k], ry[k], 1e-15 * (1 + std::abs(ry[k])));
        }
      }
    }
  }
}

TEST(Analytic, ExactSolutions) {
  EXPECT_DOUBLE_EQ(bench::make_field("constant", 1, {{"c", 2.0}}).exact_solution(State{0.0}, 1.0, 0.5)[0], -1.0);
  EXPECT_NEAR(bench::make_field("quadratic-in-rho", 1).exact_solution(State{0.0}, 0.0, 1.0)[0], 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(bench::make_field("exp-decay", 1).exact_solution(State{1.0}, 0.0, 1.0)[0], std::exp(-1.0), 1e-16);
  EXPECT_NEAR(bench::make_field("linear-in-rho", 1, {{"a", 1.0}, {"b", 2.0}}).exact_solution(State{0.0}, 0.0, 2.0)[0],
              6.0, 1e-15);
}

TEST(Analytic, EvaluationAndDefaults) {
  const auto f = bench::make_field("exp-decay", 3, {{"k", 0.5}});
  const State e = f(State{2.0, -4.0, 0.0}, 9.0);
  EXPECT_DOUBLE_EQ(e[0], -1.0);
  EXPECT_DOUBLE_EQ(e[1], 2.0);
  EXPECT_EQ(f.default_initial_state(), State(3, 1.0));
  EXPECT_EQ(bench::make_field("v1", 7).dimension(), 2u);
  EXPECT_EQ(bench::make_field("v2").default_initial_state(), (State{1.0, 0.0}));
}

TEST(Fields, Errors) {
  EXPECT_THROW((void)bench::make_field("v3"), cab::DomainError);
  EXPECT_THROW((void)bench::make_field("constant", 2, {{"k", 1.0}}), cab::ArgumentError);
  EXPECT_THROW((void)bench::BenchField(bench::FieldKind::v1, 3), cab::ArgumentError);
  EXPECT_THROW((void)bench::make_field("v1").exact_solution(State{0, 0}, 1.0, 0.0), cab::ArgumentError);
  EXPECT_THROW((void)bench::eval_v1(State{1.0}, 0.0), cab::ArgumentError);
}

TEST(NoiseModel, RectifiesBackToBenchField) {
  const cab::Schedule vp = cab::Schedule::vp_linear();
  const auto field = bench::make_field("v1");
  const cab::RectifiedField rect(bench::as_noise_model(field, vp), vp);
  const State y{0.4, -0.9};
  for (double rho : {0.1, 1.0, 20.0}) {
    const State a = rect(y, rho), b = field(y, rho);
    EXPECT_NEAR(a[0], b[0], 1e-12);
    EXPECT_NEAR(a[1], b[1], 1e-12);
  }
}

TEST(TanhField, Deterministic) {
  const bench::TanhField f(3);
  const State x{0.1, -0.2, 0.3};
  const State e = f(x, 0.5);
  const double acc0 = 0.6 * 0.1 + 0.15 * std::sin(1.0 + 2.0) * -0.2 + 0.15 * std::sin(1.0 + 4.0) * 0.3 +
                      0.4 * std::cos(1.0) * 0.5 - 0.1;
  EXPECT_NEAR(e[0], std::tanh(acc0), 1e-15);
  EXPECT_EQ(e, f(x, 0.5));
}
