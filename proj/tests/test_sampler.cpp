#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "cab/benchfields.hpp"
#include "cab/noise.hpp"
#include "cab/sampler.hpp"

using cab::GridKind;
using cab::SamplerConfig;
using cab::Schedule;
using cab::Solver;
using cab::State;

TEST(Grid, VeUniformT) {
  const Schedule ve = Schedule::ve(0.1, 1.0);
  const auto g = cab::build_grid(ve, GridKind::uniform_t, 3, false);
  ASSERT_EQ(g.nodes(), 4u);
  const double want[] = {1.0, 0.7, 0.4, 0.1};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(g.rho[k], want[k], 1e-15);
  EXPECT_FALSE(g.merged_terminal);

  const auto m = cab::build_grid(ve, GridKind::uniform_t, 3, true);
  ASSERT_EQ(m.nodes(), 3u);
  EXPECT_NEAR(m.rho[1], 0.7, 1e-15);
  EXPECT_EQ(m.rho[2], 0.1);
  EXPECT_EQ(m.t.back(), 0.1);
  EXPECT_TRUE(m.merged_terminal);
  EXPECT_NEAR(m.h[1], -0.6, 1e-15);
}

TEST(Grid, RhoSpacings) {
  const Schedule vp = Schedule::vp_linear();
  const auto u = cab::build_grid(vp, GridKind::uniform_rho, 10, false);
  for (std::size_t k = 1; k < u.intervals(); ++k) EXPECT_NEAR(u.h[k], u.h[0], 1e-8 * std::abs(u.h[0]));
  const auto l = cab::build_grid(vp, GridKind::log_uniform_rho, 10, false);
  for (std::size_t k = 1; k < l.nodes(); ++k) {
    EXPECT_NEAR(l.rho[k] / l.rho[k - 1], l.rho[1] / l.rho[0], 1e-8);
  }
  EXPECT_EQ(l.t.front(), vp.t_max());
  EXPECT_EQ(l.t.back(), vp.t_min());
}

TEST(Grid, Errors) {
  EXPECT_THROW((void)cab::build_grid(Schedule::ve(), GridKind::uniform_t, 2), cab::ArgumentError);
  try {
    (void)cab::build_grid(Schedule::ve(), GridKind::uniform_t, 2);
  } catch (const cab::ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("N >= 3"), std::string::npos);
  }
  EXPECT_THROW((void)cab::build_grid(Schedule::ve(), GridKind::uniform_t, 5, true, 0.5, 1.0), cab::DomainError);
  EXPECT_THROW((void)cab::parse_grid_kind("chebyshev"), cab::DomainError);
}

namespace {

cab::RectifiedField constant_field(const Schedule& s, double c) {
  return cab::RectifiedField(cab::bench::constant_noise_model(2, c), s);
}

}  // namespace

TEST(Sample, ConstantFieldIsExactForEverySolver) {
  const Schedule vp = Schedule::vp_linear();
  const auto field = constant_field(vp, 0.6);
  const State x0{0.2, -1.4};
  for (GridKind kind : {GridKind::uniform_t, GridKind::log_uniform_rho}) {
    for (Solver s : {Solver::euler, Solver::ab2, Solver::ab3, Solver::cab2, Solver::cab3}) {
      for (auto gamma : {cab::GammaPolicy::constant(0.0), cab::GammaPolicy::constant(1.3),
                         cab::GammaPolicy::step_scaled(0.75)}) {
        SamplerConfig cfg{s, gamma, kind, 9, true};
        const auto grid = cab::build_grid(vp, cfg);
        const auto traj = cab::sample(field, cfg, grid, x0);
        const State y0 = cab::scaled(x0, 1.0 / vp.eval(grid.t[0]).s);
        const double d = grid.rho.back() - grid.rho.front();
        for (int k = 0; k < 2; ++k) {
          EXPECT_NEAR(traj.final_node().y[k], y0[k] + d * 0.6, 1e-12 * std::abs(y0[k] + d * 0.6));
        }
      }
    }
  }
}

TEST(Sample, LinearFieldIsExactForCab2AfterStartup) {
  // eps = a + b rho in rho-space; the Euler startup step is the only error source.
  const Schedule ve = Schedule::ve(0.1, 5.0);
  const cab::ModelField lin(
      cab::Parameterization::noise, [](const State&, double t) { return State{0.5 - 0.25 * t}; }, 1);
  const cab::RectifiedField field(lin, ve);
  for (double gamma : {0.0, 0.4, 2.0}) {
    SamplerConfig cfg{Solver::cab2, cab::GammaPolicy::constant(gamma), GridKind::uniform_t, 6, false};
    const auto grid = cab::build_grid(ve, cfg);
    cab::RhoStepper st(grid.rho, State{1.0}, Solver::cab2, cfg.gamma);
    auto exact = [](double p) { return 1.0 + 0.5 * (p - 5.0) - 0.125 * (p * p - 25.0); };
    while (!st.done()) {
      const std::size_t next = st.cursor() + 1;
      st.advance(field(st.state(), st.rho()));
      if (next == 1) st.overwrite_state(State{exact(grid.rho[1])});
    }
    EXPECT_NEAR(st.state()[0], exact(grid.rho.back()), 1e-12 * std::abs(exact(grid.rho.back())));
  }
}

TEST(Sample, NfeAndMerge) {
  const Schedule rf = Schedule::rectified_flow();
  const auto field = constant_field(rf, 1.0);
  int calls = 0;
  const cab::ModelField counting(
      cab::Parameterization::noise,
      [&](const State&, double) {
        ++calls;
        return State{0.0, 0.0};
      },
      2);
  for (bool merge : {true, false}) {
    SamplerConfig cfg{Solver::cab3, cab::GammaPolicy::constant(0.25), GridKind::uniform_t, 8, merge};
    const auto grid = cab::build_grid(rf, cfg);
    calls = 0;
    const auto traj = cab::sample(cab::RectifiedField(counting, rf), cfg, grid, State{1.0, 1.0});
    EXPECT_EQ(traj.nfe_count, grid.intervals());
    EXPECT_EQ(static_cast<std::size_t>(calls), grid.intervals());
    EXPECT_EQ(traj.nodes.size(), grid.nodes());
    EXPECT_EQ(traj.final_node().t, rf.t_min());
    EXPECT_EQ(traj.nfe_count, merge ? 7u : 8u);
    EXPECT_FALSE(traj.final_node().eps.has_value());
    EXPECT_TRUE(traj.nodes.front().eps.has_value());
  }
}

TEST(Sample, XIsScaledY) {
  const Schedule vp = Schedule::vp_linear();
  const cab::RectifiedField field(cab::bench::tanh_noise_model(3), vp);
  SamplerConfig cfg;
  const auto grid = cab::build_grid(vp, cfg);
  const State x0 = cab::standard_normal(3, 1);
  const auto traj = cab::sample(field, cfg, grid, x0);
  EXPECT_EQ(traj.nodes.front().x, x0);
  for (const auto& n : traj.nodes) {
    const double s = vp.eval(n.t).s;
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(n.x[k], s * n.y[k], 1e-13 * (1 + std::abs(n.x[k])));
  }
}

TEST(Sample, GammaIsContinuous) {
  const Schedule vp = Schedule::vp_linear();
  const cab::RectifiedField field(cab::bench::tanh_noise_model(2), vp);
  const State x0{0.5, -0.5};
  auto final_y = [&](double g) {
    SamplerConfig cfg{Solver::cab2, cab::GammaPolicy::constant(g), GridKind::uniform_t, 10, true};
    return cab::sample(field, cfg, cab::build_grid(vp, cfg), x0).final_node().y;
  };
  const State a = final_y(0.5), b = final_y(0.5 + 1e-9), base = final_y(0.0), ab = [&] {
    SamplerConfig cfg{Solver::ab2, cab::GammaPolicy::constant(0.0), GridKind::uniform_t, 10, true};
    return cab::sample(field, cfg, cab::build_grid(vp, cfg), x0).final_node().y;
  }();
  EXPECT_LT(cab::distance(a, b), 1e-6);
  EXPECT_EQ(base, ab);
}

TEST(Sample, Divergence) {
  const Schedule ve = Schedule::ve();
  const cab::ModelField bad(
      cab::Parameterization::noise, [](const State& x, double t) { return State{t < 25.0 ? NAN : x[0]}; }, 1);
  SamplerConfig cfg;
  cfg.steps = 8;
  const auto grid = cab::build_grid(ve, cfg);
  try {
    (void)cab::sample(cab::RectifiedField(bad, ve), cfg, grid, State{1.0});
    FAIL() << "expected divergence";
  } catch (const cab::DivergenceError& e) {
    EXPECT_EQ(e.step(), 6u);
  }
  const cab::ModelField explode(
      cab::Parameterization::noise, [](const State& x, double) { return State{x[0] * 1e300}; }, 1);
  EXPECT_THROW((void)cab::sample(cab::RectifiedField(explode, ve), cfg, grid, State{1e10}), cab::DivergenceError);
}

TEST(Sample, Preconditions) {
  const Schedule ve = Schedule::ve();
  const auto field = constant_field(ve, 1.0);
  SamplerConfig cfg;
  const auto grid = cab::build_grid(ve, cfg);
  EXPECT_THROW((void)cab::sample(field, cfg, grid, State{1.0}), cab::ArgumentError);
  EXPECT_THROW((void)cab::sample(field, cfg, grid, State{1.0, NAN}), cab::ArgumentError);
  cfg.steps = 2;
  EXPECT_THROW((void)cab::build_grid(ve, cfg), cab::ArgumentError);
}

TEST(Stepper, RatioWarningsAreCounted) {
  const std::vector<double> rho{10.0, 9.0, 8.999, 8.0, 7.0};
  cab::RhoStepper st(rho, State{0.0}, Solver::cab2, cab::GammaPolicy::constant(0.5));
  while (!st.done()) st.advance(State{1.0});
  EXPECT_GT(st.ratio_warnings(), 0u);
  EXPECT_NEAR(st.state()[0], -3.0, 1e-12);
  EXPECT_THROW(st.advance(State{1.0}), cab::StateError);
  EXPECT_THROW((cab::RhoStepper{{1.0, 0.5, 0.7}, State{0.0}, Solver::ab2, {}}), cab::GeometryError);
}

TEST(ReverseOde, ZeroNoiseIsPureDrift) {
  const cab::ModelField zero(cab::Parameterization::noise, [](const State&, double) { return State{0.0}; }, 1);
  for (const Schedule& s : {Schedule::vp_linear(), Schedule::rectified_flow()}) {
    const auto grid = cab::build_grid(s, GridKind::uniform_t, 6, false);
    const auto traj = cab::sample_reverse_ode(zero, s, grid, State{1.3}, 1e-10);
    const double sT = s.eval(grid.t.front()).s;
    for (const auto& n : traj.nodes) {
      const double want = s.eval(n.t).s / sT * 1.3;
      EXPECT_NEAR(n.x[0], want, 1e-9 * want);
    }
  }
}

TEST(ReverseOde, SamplerConvergesToReference) {
  const Schedule vp = Schedule::vp_linear();
  const cab::RectifiedField field(cab::bench::tanh_noise_model(2), vp);
  const State x0{0.7, -0.2};
  auto final_error = [&](Solver s, int n) {
    SamplerConfig cfg{s, cab::GammaPolicy::constant(0.75), GridKind::uniform_t, n, false};
    const auto grid = cab::build_grid(vp, cfg);
    const auto ref = cab::sample_reverse_ode(field.model(), vp, grid, x0, 1e-11);
    return cab::distance(cab::sample(field, cfg, grid, x0).final_node().x, ref.final_node().x);
  };
  double prev = final_error(Solver::ab2, 40);
  for (int n : {80, 160, 320, 640}) {
    const double err = final_error(Solver::ab2, n);
    EXPECT_LT(err, prev / 3.0);
    prev = err;
  }
  EXPECT_LT(final_error(Solver::cab2, 640), final_error(Solver::cab2, 40) / 50.0);
  EXPECT_LT(final_error(Solver::cab2, 640), final_error(Solver::ab2, 640));
}

TEST(Csv, TrajectoryFormat) {
  const Schedule ve = Schedule::ve(0.1, 1.0);
  SamplerConfig cfg{Solver::ab2, {}, GridKind::uniform_t, 3, false};
  const auto traj = cab::sample(constant_field(ve, 1.0), cfg, cab::build_grid(ve, cfg), State{0.0, 1.0});
  std::ostringstream os;
  const std::vector<std::string> comments{"hello"};
  cab::write_trajectory_csv(os, traj, comments);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("# hello\nstep,t,rho,y_0,y_1,x_0,x_1\n0,1,1,0,1,0,1\n", 0), 0u);
  EXPECT_EQ(cab::format_double(0.1), "0.10000000000000001");
}
