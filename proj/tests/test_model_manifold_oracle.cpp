#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "parabolicity/cli_reporting.hpp"
#include "parabolicity/model_manifold_oracle.hpp"

using namespace parabolicity;

namespace {

std::vector<double> interior(double a, double b, std::size_t n) {
  std::vector<double> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / (n - 1));
  return g;
}

}  // namespace

TEST(RadialCurvature, ClosedFormModels) {
  const auto e = WarpedModel::euclidean(3, 5.0);
  const auto h = WarpedModel::hyperbolic(3, 5.0);
  const auto s = WarpedModel::sphere(3, 3.0);
  for (double r : {0.1, 1.0, 2.9}) {
    EXPECT_EQ(radial_curvature(e, r), 0.0);
    EXPECT_NEAR(radial_curvature(h, r), -1.0, 1e-15);
    EXPECT_NEAR(radial_curvature(s, r), 1.0, 1e-15);
    EXPECT_NEAR(-h.d2sigma(r) / h.sigma(r), -1.0, 1e-14);
    EXPECT_NEAR(-s.d2sigma(r) / s.sigma(r), 1.0, 1e-14);
  }
  EXPECT_THROW(radial_curvature(h, 0.0), DomainError);
  EXPECT_THROW(radial_curvature(h, 6.0), DomainError);
}

TEST(Models, Invariants) {
  EXPECT_THROW(WarpedModel::sphere(3, 4.0), ParameterError);
  EXPECT_THROW(WarpedModel::hyperbolic(1, 4.0), ParameterError);
  const auto grid = uniform_grid(2.0, 101);
  CustomWarp tanh_half;
  for (double r : grid) {
    const double t = std::tanh(r);
    tanh_half.r.push_back(r);
    tanh_half.sigma.push_back(std::sqrt(t));
    tanh_half.dsigma.push_back(r == 0.0 ? 1e300 : 0.5 / std::sqrt(t) * (1 - t * t));
    tanh_half.d2sigma.push_back(0.0);
  }
  EXPECT_THROW(WarpedModel(tanh_half, 3, 2.0), ParameterError);
}

TEST(Riccati, ClosedFormIdentity) {
  EXPECT_LT(riccati_check(WarpedModel::hyperbolic(3, 5.0), interior(0.5, 5.0, 200)), 1e-9);
  EXPECT_LT(riccati_check(WarpedModel::euclidean(3, 5.0), interior(0.5, 5.0, 200)), 1e-12);
}

TEST(Riccati, TabulatedIsSecondOrder) {
  const auto k = RadialCurvatureProfile::constant(-1.0);
  const auto residual_at = [&](std::size_t nodes) {
    const auto sol = solve_comparison_ode(k, uniform_grid(5.0, nodes));
    const auto model = WarpedModel::from_solution(sol, k, 3);
    std::vector<double> g(sol.grid.begin() + static_cast<long>(nodes / 10), sol.grid.end());
    return riccati_check(model, g);
  };
  const double r1 = residual_at(101), r2 = residual_at(201);
  EXPECT_GT(r1 / r2, 3.0);
  EXPECT_LT(r2, 1e-2);
}

TEST(ExactVolume, Oracles) {
  EXPECT_NEAR(exact_volume(WarpedModel::euclidean(3, 2.0), 1.0) / (4.0 * std::numbers::pi / 3.0), 1.0, 1e-10);
  EXPECT_NEAR(exact_volume(WarpedModel::hyperbolic(2, 2.0), 2.0) / (2.0 * std::numbers::pi * (std::cosh(2.0) - 1.0)),
              1.0, 1e-10);
  EXPECT_NEAR(exact_volume(WarpedModel::sphere(3, std::numbers::pi), std::numbers::pi) /
                  (2.0 * std::numbers::pi * std::numbers::pi),
              1.0, 1e-10);
}

TEST(VerifyComparison, HyperbolicEquality) {
  const auto model = WarpedModel::hyperbolic(3, 5.0);
  const auto k = RadialCurvatureProfile::constant(-1.0);
  const auto rep = verify_comparison(model, k, solve_comparison_ode(k, 5.0));
  EXPECT_TRUE(rep.holds);
  EXPECT_LT(rep.max_relative_gap, 1e-8);
}

TEST(VerifyComparison, WeakenedBoundIsStrict) {
  const auto model = WarpedModel::hyperbolic(3, 5.0);
  const auto k = RadialCurvatureProfile::constant(-2.0);
  const auto sol = solve_comparison_ode(k, 5.0);
  const auto rep = verify_comparison(model, k, sol);
  EXPECT_TRUE(rep.holds);
  for (std::size_t i = 1; i < sol.grid.size(); ++i) EXPECT_LT(model.sigma(sol.grid[i]), sol.phi[i]);
}

TEST(VerifyComparison, SelfConsistency) {
  ProfileSpec spec;
  spec.family = Sech2Decay{1.0};
  spec.glue = GlueSpec{0.0, 2.0};
  spec.delta = 0.4;
  const auto built = build_comparison_profile(spec, 3);
  const auto sol = solve_comparison_ode(built.profile, 20.0);
  const auto model = WarpedModel::from_solution(sol, built.profile, 3);
  const auto rep = verify_comparison(model, built.profile, sol);
  EXPECT_TRUE(rep.holds);
  EXPECT_LT(rep.max_relative_gap, 1e-12);
}

TEST(VerifyComparison, HypothesisChecked) {
  const auto model = WarpedModel::hyperbolic(3, 5.0);
  const auto k = RadialCurvatureProfile::constant(-0.5);
  EXPECT_THROW(verify_comparison(model, k, solve_comparison_ode(k, 5.0)), HypothesisError);
}

TEST(VerifyComparison, PoleLimit) {
  const auto k = RadialCurvatureProfile::constant(-3.0);
  const auto sol = solve_comparison_ode(k, uniform_grid(0.01, 11));
  const auto model = WarpedModel::hyperbolic(3, 1.0, std::sqrt(3.0));
  EXPECT_NEAR(model.sigma(1e-3) / sol.phi[1], 1.0, 1e-9);
}

TEST(CustomModel, CsvRoundTrip) {
  std::ostringstream out;
  out << "r,sigma,dsigma,d2sigma\n";
  for (double r : uniform_grid(3.0, 301)) {
    out << std::setprecision(17) << r << ',' << std::sinh(r) << ',' << std::cosh(r) << ',' << std::sinh(r) << '\n';
  }
  std::istringstream in(out.str());
  const WarpedModel model(read_model_csv(in), 3, 3.0);
  EXPECT_NEAR(model.sigma(1.234), std::sinh(1.234), 1e-9);
  EXPECT_NEAR(radial_curvature(model, 2.0), -1.0, 1e-9);
  const auto k = RadialCurvatureProfile::constant(-1.001);
  EXPECT_TRUE(verify_comparison(model, k, solve_comparison_ode(k, 3.0)).holds);
}

TEST(CustomModel, CsvErrors) {
  std::istringstream bad_header("r,sigma,dsigma\n0,0,1\n");
  EXPECT_THROW(read_model_csv(bad_header), ConfigError);
  std::istringstream short_row("r,sigma,dsigma,d2sigma\n0,0,1\n");
  EXPECT_THROW(read_model_csv(short_row), ConfigError);
}
