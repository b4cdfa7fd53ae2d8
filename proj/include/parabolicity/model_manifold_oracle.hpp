#pragma once

// Rotationally symmetric models dr^2 + sigma(r)^2 dtheta^2. On a model every
// radial quantity is exact, so it serves as ground truth for the comparison
// sigma <= phi and Vol(B(r)) <= Vbar(r) whenever the profile lies below the
// model's radial curvature -sigma''/sigma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <boost/math/interpolators/cubic_hermite.hpp>

#include "parabolicity/comparison_engine.hpp"
#include "parabolicity/curvature_profiles.hpp"
#include "parabolicity/errors.hpp"

namespace parabolicity {

struct EuclideanWarp {};
/// sigma = sinh(k r) / k, curvature -k^2.
struct HyperbolicWarp {
  double k = 1.0;
};
/// sigma = sin(k r) / k, curvature +k^2, domain r <= pi / k.
struct SphereWarp {
  double k = 1.0;
};
/// Tabulated sigma with its first two derivatives; r[0] must be 0.
struct CustomWarp {
  std::vector<double> r, sigma, dsigma, d2sigma;
};

using Warp = std::variant<EuclideanWarp, HyperbolicWarp, SphereWarp, CustomWarp>;

class WarpedModel {
 public:
  WarpedModel(Warp warp, int dimension, double r_end);

  static WarpedModel euclidean(int n, double r_end) { return {EuclideanWarp{}, n, r_end}; }
  static WarpedModel hyperbolic(int n, double r_end, double k = 1.0) { return {HyperbolicWarp{k}, n, r_end}; }
  static WarpedModel sphere(int n, double r_end, double k = 1.0) { return {SphereWarp{k}, n, r_end}; }

  /// Model whose warping function is a solver output; sigma'' = -K phi.
  template <CurvatureProfile P>
  static WarpedModel from_solution(const ComparisonSolution& sol, const P& profile, int n) {
    CustomWarp w{sol.grid, sol.phi, sol.dphi, {}};
    w.d2sigma.reserve(sol.grid.size());
    for (std::size_t i = 0; i < sol.grid.size(); ++i) w.d2sigma.push_back(-profile(sol.grid[i]) * sol.phi[i]);
    return {std::move(w), n, sol.grid.back()};
  }

  std::string name() const;
  int dimension() const noexcept { return dimension_; }
  double r_end() const noexcept { return r_end_; }
  const Warp& warp() const noexcept { return warp_; }
  bool tabulated() const noexcept { return std::holds_alternative<CustomWarp>(warp_); }

  double sigma(double r) const;
  double dsigma(double r) const;
  double d2sigma(double r) const;

 private:
  void check_radius(double r) const {
    if (r < 0.0 || r > r_end_ * (1.0 + 1e-12)) {
      throw DomainError("radius " + std::to_string(r) + " outside model domain [0, " +
                        std::to_string(r_end_) + "]");
    }
  }

  using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;

  Warp warp_;
  int dimension_;
  double r_end_;
  std::shared_ptr<const Hermite> sigma_interp_;
  std::shared_ptr<const Hermite> dsigma_interp_;
};

inline WarpedModel::WarpedModel(Warp warp, int dimension, double r_end)
    : warp_(std::move(warp)), dimension_(dimension), r_end_(r_end) {
  if (dimension_ < 2) throw ParameterError("model dimension must be >= 2");
  if (!(r_end_ > 0.0)) throw ParameterError("model r_end must be positive");
  if (const auto* h = std::get_if<HyperbolicWarp>(&warp_); h && !(h->k > 0.0)) {
    throw ParameterError("hyperbolic scale k must be positive");
  }
  if (const auto* s = std::get_if<SphereWarp>(&warp_)) {
    if (!(s->k > 0.0)) throw ParameterError("sphere scale k must be positive");
    if (r_end_ > std::numbers::pi / s->k * (1.0 + 1e-12)) {
      throw ParameterError("sphere model cannot extend past its pole at pi / k");
    }
  }
  if (auto* c = std::get_if<CustomWarp>(&warp_)) {
    const std::size_t m = c->r.size();
    if (m < 4 || c->sigma.size() != m || c->dsigma.size() != m || c->d2sigma.size() != m) {
      throw ParameterError("custom model needs >= 4 rows of (r, sigma, dsigma, d2sigma)");
    }
    if (c->r.front() != 0.0) throw ParameterError("custom model table must start at r = 0");
    for (std::size_t i = 1; i < m; ++i) {
      if (!(c->r[i] > c->r[i - 1])) throw ParameterError("custom model radii must be increasing");
      if (!(c->sigma[i] > 0.0)) {
        throw ParameterError("custom model sigma must be positive on (0, r_end]");
      }
    }
    // Smooth pole: sigma(0) = 0, sigma'(0) = 1. Rejects e.g. tanh^delta, delta < 1.
    if (std::abs(c->sigma.front()) > 1e-9 || std::abs(c->dsigma.front() - 1.0) > 1e-6) {
      throw ParameterError("custom model violates the pole condition sigma(0) = 0, sigma'(0) = 1");
    }
    r_end_ = std::min(r_end_, c->r.back());
    sigma_interp_ = std::make_shared<const Hermite>(std::vector<double>(c->r), std::vector<double>(c->sigma),
                                                    std::vector<double>(c->dsigma));
    dsigma_interp_ = std::make_shared<const Hermite>(std::vector<double>(c->r), std::vector<double>(c->dsigma),
                                                     std::vector<double>(c->d2sigma));
  }
}

inline std::string WarpedModel::name() const {
  switch (warp_.index()) {
    case 0: return "euclidean";
    case 1: return "hyperbolic";
    case 2: return "sphere";
    default: return "custom";
  }
}

inline double WarpedModel::sigma(double r) const {
  check_radius(r);
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, EuclideanWarp>) return r;
        else if constexpr (std::is_same_v<T, HyperbolicWarp>) return std::sinh(w.k * r) / w.k;
        else if constexpr (std::is_same_v<T, SphereWarp>) return std::sin(w.k * r) / w.k;
        else return (*sigma_interp_)(std::min(r, r_end_));
      },
      warp_);
}

inline double WarpedModel::dsigma(double r) const {
  check_radius(r);
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, EuclideanWarp>) return 1.0;
        else if constexpr (std::is_same_v<T, HyperbolicWarp>) return std::cosh(w.k * r);
        else if constexpr (std::is_same_v<T, SphereWarp>) return std::cos(w.k * r);
        else return (*dsigma_interp_)(std::min(r, r_end_));
      },
      warp_);
}

inline double WarpedModel::d2sigma(double r) const {
  check_radius(r);
  return std::visit(
      [&](const auto& w) -> double {
        using T = std::decay_t<decltype(w)>;
        if constexpr (std::is_same_v<T, EuclideanWarp>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, HyperbolicWarp>) {
          return w.k * std::sinh(w.k * r);
        } else if constexpr (std::is_same_v<T, SphereWarp>) {
          return -w.k * std::sin(w.k * r);
        } else {
          const auto it = std::upper_bound(w.r.begin(), w.r.end(), r);
          if (it == w.r.end()) return w.d2sigma.back();
          const auto j = static_cast<std::size_t>(it - w.r.begin());
          const double t = (r - w.r[j - 1]) / (w.r[j] - w.r[j - 1]);
          return (1.0 - t) * w.d2sigma[j - 1] + t * w.d2sigma[j];
        }
      },
      warp_);
}

/// -sigma''/sigma, the per-direction radial curvature realized by the model.
inline double radial_curvature(const WarpedModel& model, double r) {
  if (!(r > 0.0)) throw DomainError("radial curvature is a 0/0 limit at r = 0");
  if (r > model.r_end() * (1.0 + 1e-12)) throw DomainError("radius outside model domain");
  const Warp& w = model.warp();
  if (std::holds_alternative<EuclideanWarp>(w)) return 0.0;
  if (const auto* h = std::get_if<HyperbolicWarp>(&w)) return -h->k * h->k;
  if (const auto* s = std::get_if<SphereWarp>(&w)) return s->k * s->k;
  return -model.d2sigma(r) / model.sigma(r);
}

/// max |u' + u^2 + K| with u = sigma'/sigma and K = -sigma''/sigma. Closed-form
/// models use the exact u' (an algebraic identity, so round-off only);
/// tabulated models difference u on the grid, so the result is O(h^2).
inline double riccati_check(const WarpedModel& model, const std::vector<double>& grid) {
  double worst = 0.0;
  if (!model.tabulated()) {
    for (double r : grid) {
      const double s = model.sigma(r), ds = model.dsigma(r), d2s = model.d2sigma(r);
      if (!(s > 0.0)) throw PreconditionError("riccati_check: grid hits a zero of sigma");
      const double u = ds / s;
      const double du = (d2s * s - ds * ds) / (s * s);
      worst = std::max(worst, std::abs(du + u * u + radial_curvature(model, r)));
    }
    return worst;
  }
  if (grid.size() < 3) throw ParameterError("riccati_check: need >= 3 nodes for a tabulated model");
  std::vector<double> u(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double s = model.sigma(grid[i]);
    if (!(s > 0.0)) throw PreconditionError("riccati_check: grid hits a zero of sigma");
    u[i] = model.dsigma(grid[i]) / s;
  }
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double h0 = grid[i] - grid[i - 1], h1 = grid[i + 1] - grid[i];
    const double du = (h0 * h0 * (u[i + 1] - u[i]) + h1 * h1 * (u[i] - u[i - 1])) / (h0 * h1 * (h0 + h1));
    worst = std::max(worst, std::abs(du + u[i] * u[i] + radial_curvature(model, grid[i])));
  }
  return worst;
}

namespace detail {

inline double model_integrand(const WarpedModel& m, double omega, double r) {
  return omega * std::pow(std::max(m.sigma(r), 0.0), m.dimension() - 1);
}

inline double simpson_uniform(const WarpedModel& m, double omega, double a, double b, std::size_t pieces) {
  const double h = (b - a) / static_cast<double>(pieces);
  double acc = model_integrand(m, omega, a) + model_integrand(m, omega, b);
  for (std::size_t i = 1; i < pieces; ++i) {
    acc += (i % 2 ? 4.0 : 2.0) * model_integrand(m, omega, a + h * static_cast<double>(i));
  }
  return acc * h / 3.0;
}

}  // namespace detail

/// omega_{n-1} int_0^r sigma^{n-1}: composite Simpson, doubled until two
/// successive values agree (Richardson estimate) to ~1e-14 relative.
inline double exact_volume(const WarpedModel& model, double r) {
  if (r < 0.0 || r > model.r_end() * (1.0 + 1e-12)) throw DomainError("exact_volume: r outside model domain");
  if (r == 0.0) return 0.0;
  const double omega = sphere_area_constant(model.dimension());
  std::size_t pieces = 256;
  double prev = detail::simpson_uniform(model, omega, 0.0, r, pieces);
  for (int it = 0; it < 14; ++it) {
    pieces *= 2;
    const double cur = detail::simpson_uniform(model, omega, 0.0, r, pieces);
    if (std::abs(cur - prev) / 15.0 <= 1e-14 * std::abs(cur)) return cur;
    prev = cur;
  }
  return prev;
}

/// Model volumes at every node of `grid`. Each interval takes Simpson with 16
/// and 32 panels plus one Richardson step, exact through degree five so the
/// r^{n-1} behaviour at the pole carries no relative error.
inline std::vector<double> exact_volume_profile(const WarpedModel& model, const std::vector<double>& grid) {
  const double omega = sphere_area_constant(model.dimension());
  std::vector<double> out(grid.size(), 0.0);
  double acc = grid.empty() || grid.front() == 0.0 ? 0.0 : exact_volume(model, grid.front());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) {
      const double coarse = detail::simpson_uniform(model, omega, grid[i - 1], grid[i], 16);
      const double fine = detail::simpson_uniform(model, omega, grid[i - 1], grid[i], 32);
      acc += fine + (fine - coarse) / 15.0;
    }
    out[i] = acc;
  }
  return out;
}

struct ComparisonReport {
  std::string model;
  std::size_t nodes_checked = 0;
  double max_sigma_excess = 0.0;   // max (sigma - phi) / phi
  double max_volume_excess = 0.0;  // max (V_exact - Vbar) / Vbar
  double max_relative_gap = 0.0;   // max |sigma - phi| / phi
  double tolerance = 1e-6;
  bool holds = false;
};

/// Checks sigma <= phi (1 + tol) and V_exact <= Vbar (1 + tol) at every grid
/// node after verifying the hypothesis profile(r) <= -sigma''/sigma there.
template <CurvatureProfile P>
ComparisonReport verify_comparison(const WarpedModel& model, const P& profile, const ComparisonSolution& sol,
                                   double tol = 1e-6) {
  if (sol.grid.size() < 2) throw ParameterError("verify_comparison: solution too short");
  if (sol.grid.back() > model.r_end() * (1.0 + 1e-12)) {
    throw PreconditionError("verify_comparison: solution extends past the model domain");
  }
  for (std::size_t i = 1; i < sol.grid.size(); ++i) {
    const double r = sol.grid[i];
    if (model.sigma(r) <= 0.0) continue;  // sphere pole at r_end
    const double k_model = radial_curvature(model, r);
    const double k_profile = profile(r);
    if (k_profile > k_model + 1e-12 * std::max(1.0, std::abs(k_model))) {
      throw HypothesisError("profile " + std::to_string(k_profile) + " exceeds model curvature " +
                            std::to_string(k_model) + " at r = " + std::to_string(r));
    }
  }
  const VolumeBound vb = volume_upper_bound(sol, model.dimension());
  const std::vector<double> exact = exact_volume_profile(model, sol.grid);

  ComparisonReport rep;
  rep.model = model.name();
  rep.tolerance = tol;
  rep.max_sigma_excess = -std::numeric_limits<double>::infinity();
  rep.max_volume_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < sol.grid.size(); ++i) {
    const double phi = sol.phi[i];
    if (!(phi > 0.0)) continue;
    const double diff = (model.sigma(sol.grid[i]) - phi) / phi;
    rep.max_sigma_excess = std::max(rep.max_sigma_excess, diff);
    rep.max_relative_gap = std::max(rep.max_relative_gap, std::abs(diff));
    rep.max_volume_excess = std::max(rep.max_volume_excess, (exact[i] - vb.vbar[i]) / vb.vbar[i]);
    ++rep.nodes_checked;
  }
  rep.holds = rep.nodes_checked > 0 && rep.max_sigma_excess <= tol && rep.max_volume_excess <= tol;
  return rep;
}

}  // namespace parabolicity
