#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "parabolicity/comparison_engine.hpp"
#include "parabolicity/curvature_profiles.hpp"
#include "parabolicity/growth_analysis.hpp"
#include "parabolicity/model_manifold_oracle.hpp"

using namespace parabolicity;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> span_grid(double a, double b, std::size_t n) {
  std::vector<double> g;
  for (std::size_t i = 0; i < n; ++i) g.push_back(a + (b - a) * static_cast<double>(i) / (n - 1));
  return g;
}

// Closed-form solutions against their curvature profiles, exact phi''.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::ostringstream d;
  for (double delta : {0.1, 0.3, 0.49}) {
    const double r = closed_form_residual(TanhDeltaForm{delta}, RadialCurvatureProfile(KDelta{delta}),
                                          span_grid(0.5, 10.0, 2001));
    worst = std::max(worst, r);
    d << "tanh^" << delta << " " << r << "; ";
  }
  for (double alpha : {0.5, 1.0, 2.0}) {
    const double r = closed_form_residual(PowerForm{alpha}, RadialCurvatureProfile(PowerDecay{alpha}, 1.2),
                                          span_grid(1.5, 50.0, 2001));
    worst = std::max(worst, r);
    d << "power " << alpha << " " << r << "; ";
  }
  const double t = seconds_since(t0);
  d << "max " << worst << ", " << t << " s";
  return {worst < 1e-8 && t < 1.0, d.str()};
}

// Threshold reproduction on the power family.
Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  CertifyOptions opts;
  opts.grid = GridSpec{GridKind::Stretched, 1e6, 4096, 0.01};
  bool ok = true;
  double worst_p = 0.0, worst_g = 0.0;
  std::ostringstream d;
  for (double alpha : {0.5, 1.0, 2.0}) {
    for (int n : {2, 3, 5}) {
      ProfileSpec spec;
      spec.family = PowerDecay{alpha};
      spec.glue = GlueSpec{-5.0, 2.0};
      const auto cert = certify(spec, n, opts);
      const double target = analytic_threshold(spec.family, n);
      const double gp = cert.threshold ? std::abs(*cert.threshold - target) : INFINITY;
      const double gg = std::abs(cert.growth.exponent - target);
      worst_p = std::max(worst_p, gp);
      worst_g = std::max(worst_g, gg);
      ok = ok && gp <= 0.1 && gg <= 0.05;
    }
  }
  const double t = seconds_since(t0);
  d << "max |p*-target| " << worst_p << ", max |gamma-target| " << worst_g << ", " << t << " s";
  return {ok && t < 30.0, d.str()};
}

// Linear growth and all-p certification for the glued sech^2 bound.
Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  ProfileSpec spec;
  spec.family = Sech2Decay{1.0};
  spec.delta = 0.4;
  spec.glue = GlueSpec{0.0, 2.0};
  CertifyOptions opts;
  opts.p_values = {1.1, 1.5, 2.0, 3.0, 6.0};
  const auto cert = certify(spec, 3, opts);
  bool all = true;
  std::ostringstream d;
  d << "gamma " << cert.growth.exponent << "; ";
  for (const auto& v : cert.verdicts) {
    all = all && v.verdict == Verdict::Certified;
    d << "p=" << v.p << " " << to_string(v.verdict) << "; ";
  }
  const double t = seconds_since(t0);
  d << t << " s";
  const bool growth_ok = cert.growth.exponent >= 0.95 && cert.growth.exponent <= 1.05;
  return {growth_ok && all && t < 10.0, d.str()};
}

Outcome criterion4() {
  bool ok = true;
  std::ostringstream d;
  for (auto [alpha, delta] : {std::pair{1.0, 0.1}, {1.0, 0.49}, {2.0, 0.999}}) {
    const double ratio = eval_k_delta(delta, 20.0) / eval_sech2(alpha, 20.0);
    const double err = std::abs(ratio - 2.0 * delta / alpha);
    ok = ok && err <= 1e-3;
    d << "(" << alpha << "," << delta << ") " << ratio << "; ";
  }
  return {ok, d.str()};
}

Outcome criterion5() {
  const double pi = std::numbers::pi;
  const double e_exact = 4.0 * pi / 3.0;
  const double h_exact = 2.0 * pi * (std::cosh(2.0) - 1.0);
  const double s_exact = 2.0 * pi * pi;
  const auto vb_e = volume_upper_bound(solve_comparison_ode(RadialCurvatureProfile::constant(0.0), 1.0), 3);
  const auto vb_h = volume_upper_bound(solve_comparison_ode(RadialCurvatureProfile::constant(-1.0), 2.0), 2);
  const double e_model = exact_volume(WarpedModel::euclidean(3, 1.0), 1.0);
  const double h_model = exact_volume(WarpedModel::hyperbolic(2, 2.0), 2.0);
  const double s_model = exact_volume(WarpedModel::sphere(3, pi), pi);
  const double r1 = std::max(std::abs(vb_e.vbar.back() / e_exact - 1), std::abs(e_model / e_exact - 1));
  const double r2 = std::max(std::abs(vb_h.vbar.back() / h_exact - 1), std::abs(h_model / h_exact - 1));
  const double r3 = std::abs(s_model / s_exact - 1);
  std::ostringstream d;
  d << "rel errors euclidean " << r1 << ", hyperbolic " << r2 << ", sphere " << r3;
  return {r1 < 1e-6 && r2 < 1e-6 && r3 < 1e-5, d.str()};
}

// Comparison oracle on random (model, weaker profile) pairs plus the three
// saturating pairs.
Outcome criterion6() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int passed = 0, run = 0;
  double worst_sigma = -INFINITY, worst_volume = -INFINITY;
  while (run < 20) {
    const int kind = static_cast<int>(u(rng) * 3.0);
    const int n = 2 + static_cast<int>(u(rng) * 4.0);
    const double k = 0.5 + 1.5 * u(rng);
    WarpedModel model = kind == 0   ? WarpedModel::euclidean(n, 1.0 + 4.0 * u(rng))
                        : kind == 1 ? WarpedModel::hyperbolic(n, 1.0 + 3.0 * u(rng), k)
                                    : WarpedModel::sphere(n, (0.3 + 0.6 * u(rng)) * std::numbers::pi / k, k);
    const double kmodel = kind == 0 ? 0.0 : kind == 1 ? -k * k : k * k;
    const double b = kmodel - 2.0 * u(rng);
    const double c = kmodel - 2.0 * u(rng);
    const double r_glue = 0.2 + 0.5 * model.r_end() * u(rng);
    const bool glued = u(rng) < 0.5;
    const AnyProfile profile = glued ? AnyProfile(GluedProfile(b, r_glue, RadialCurvatureProfile::constant(c)))
                                     : AnyProfile(RadialCurvatureProfile::constant(b));
    const auto sol = solve_comparison_ode(profile, uniform_grid(model.r_end(), 1025));
    if (sol.first_zero) continue;
    ComparisonReport rep;
    try {
      rep = verify_comparison(model, profile, sol);
    } catch (const HypothesisError&) {
      continue;
    }
    ++run;
    worst_sigma = std::max(worst_sigma, rep.max_sigma_excess);
    worst_volume = std::max(worst_volume, rep.max_volume_excess);
    if (rep.holds) ++passed;
  }
  double worst_gap = 0.0;
  const std::vector<std::pair<WarpedModel, double>> saturating{
      {WarpedModel::euclidean(3, 5.0), 0.0},
      {WarpedModel::hyperbolic(3, 5.0, 1.3), -1.69},
      {WarpedModel::sphere(4, 0.95 * std::numbers::pi, 1.0), 1.0}};
  bool equal = true;
  for (const auto& [model, kk] : saturating) {
    const auto profile = RadialCurvatureProfile::constant(kk);
    const auto sol = solve_comparison_ode(profile, uniform_grid(model.r_end(), 1025), 1e-10);
    const auto rep = verify_comparison(model, profile, sol);
    worst_gap = std::max(worst_gap, rep.max_relative_gap);
    equal = equal && rep.holds && rep.max_relative_gap < 1e-8;
  }
  std::ostringstream d;
  d << passed << "/20 random pairs hold (max sigma excess " << worst_sigma << ", max volume excess "
    << worst_volume << "); saturating max gap " << worst_gap;
  return {passed == 20 && equal, d.str()};
}

Outcome criterion7() {
  int wrong = 0;
  std::ostringstream d;
  bool log_path = false;
  for (double e : {-3.0, -2.0, -1.2, -1.0, -0.8, -0.5, 0.0}) {
    std::vector<double> r, g;
    for (double x = 10.0; x <= 1e4; x *= 1.01) {
      r.push_back(x);
      g.push_back(std::pow(x, e));
    }
    const auto rep = classify_divergence(r, g);
    const auto expect = e >= -1.0 ? Divergence::Divergent : Divergence::Convergent;
    if (rep.verdict != expect) ++wrong;
    if (e == -1.0) log_path = rep.escalated && rep.verdict == Divergence::Divergent;
    d << e << ":" << to_string(rep.verdict) << (rep.escalated ? "(escalated)" : "") << " ";
  }
  d << "misclassified " << wrong;
  return {wrong == 0 && log_path, d.str()};
}

Outcome criterion8() {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> kd(-3.0, 2.0), cd(0.1, 10.0);
  const auto grid = uniform_grid(6.0, 601);
  int violations = 0;
  for (int t = 0; t < 100; ++t) {
    double k1 = kd(rng), k2 = kd(rng);
    if (k1 > k2) std::swap(k1, k2);
    const auto s1 = solve_comparison_ode(RadialCurvatureProfile::constant(k1), grid);
    const auto s2 = solve_comparison_ode(RadialCurvatureProfile::constant(k2), grid);
    const std::size_t m = std::min(s1.phi.size(), s2.phi.size());
    for (std::size_t i = 0; i < m; ++i) {
      if (s1.phi[i] < s2.phi[i] - 1e-9 * std::max(1.0, s2.phi[i])) {
        ++violations;
        break;
      }
    }
  }
  const auto tg = uniform_grid(100.0, 1001);
  std::vector<double> f, g;
  for (double r : tg) {
    f.push_back(r * r + 1.0);
    g.push_back(std::sqrt(r + 1.0) * (2.0 + std::sin(r)));
  }
  const double identity = tail_dominance(tg, f, f, 1.0).beta;
  const double beta = tail_dominance(tg, g, f, 1.0).beta;
  double worst_scale = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double c = cd(rng);
    std::vector<double> cg;
    for (double v : g) cg.push_back(c * v);
    worst_scale = std::max(worst_scale, std::abs(tail_dominance(tg, cg, f, 1.0).beta / (c * beta) - 1.0));
  }
  std::ostringstream d;
  d << "sturm violations " << violations << "/100; identity beta " << identity << "; max scaling error "
    << worst_scale;
  return {violations == 0 && identity == 1.0 && worst_scale < 1e-12, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= 8; ++i) which.push_back(i);
  }
  int failures = 0;
  for (int id : which) {
    if (id < 1 || id > 8) {
      std::printf("criterion %d: FAIL (no such criterion)\n", id);
      ++failures;
      continue;
    }
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(id - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
