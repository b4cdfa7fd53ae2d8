#pragma once

// Jacobi comparison ODE phi'' + K phi = 0, phi(0) = 0, phi'(0) = 1, its
// closed-form solutions, the volume upper bound
//   Vbar(r) = omega_{n-1} * int_0^r phi^{n-1},
// and the tail-dominance constant beta with g <= beta f past R0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "parabolicity/curvature_profiles.hpp"
#include "parabolicity/errors.hpp"
#include "parabolicity/grid.hpp"
#include "parabolicity/numerics.hpp"
#include "parabolicity/ode.hpp"

namespace parabolicity {

enum class SolutionMethod { Adaptive, ClosedForm };

struct ComparisonSolution {
  std::vector<double> grid;
  std::vector<double> phi;
  std::vector<double> dphi;
  std::vector<double> d2phi;  // -K phi, or exact for closed forms
  SolutionMethod method = SolutionMethod::Adaptive;
  double tolerance = 0.0;
  std::optional<double> first_zero;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

inline constexpr double kMinOdeTolerance = 1e-12;
inline constexpr double kMaxOdeTolerance = 1e-4;

namespace detail {

inline void check_tolerance(double tol) {
  if (!(tol >= kMinOdeTolerance && tol <= kMaxOdeTolerance)) {
    throw ParameterError("ODE tolerance must lie in [1e-12, 1e-4]");
  }
}

}  // namespace detail

/// Integrates the comparison ODE on `grid` (strictly increasing, grid[0] = 0)
/// with an adaptive Dormand-Prince pair, resampling dense output at the nodes.
/// Stops at the first positive zero of phi; the returned grid then holds only
/// the nodes before it.
template <CurvatureProfile P>
ComparisonSolution solve_comparison_ode(const P& profile, const std::vector<double>& grid,
                                        double tol = 1e-10) {
  detail::check_tolerance(tol);
  if (grid.size() < 2 || grid.front() != 0.0) {
    throw ParameterError("solve_comparison_ode: grid must start at 0 and have >= 2 nodes");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ParameterError("solve_comparison_ode: grid not increasing");
  }
  using Solver = Dopri5<2>;
  const auto rhs = [&profile](double r, const Solver::State& y) {
    return Solver::State{y[1], -profile(r) * y[0]};
  };
  Solver::Options opts;
  opts.rtol = tol;
  opts.atol = tol;
  opts.initial_step = std::min(1e-4, grid[1]);
  Solver solver(rhs, 0.0, Solver::State{0.0, 1.0}, opts);

  ComparisonSolution sol;
  sol.method = SolutionMethod::Adaptive;
  sol.tolerance = tol;
  sol.grid.reserve(grid.size());
  sol.phi.reserve(grid.size());
  sol.dphi.reserve(grid.size());
  sol.grid.push_back(0.0);
  sol.phi.push_back(0.0);
  sol.dphi.push_back(1.0);

  const double r_end = grid.back();
  std::size_t next = 1;
  while (next < grid.size()) {
    solver.step(r_end);
    const double t_old = solver.previous_time();
    const double t_new = solver.time();
    if (solver.state()[0] <= 0.0) {
      // phi > 0 on (t_old, zero): bisect the continuous extension.
      double lo = t_old, hi = t_new;
      for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (solver.dense(mid)[0] > 0.0 ? lo : hi) = mid;
      }
      sol.first_zero = 0.5 * (lo + hi);
      while (next < grid.size() && grid[next] < *sol.first_zero) {
        const auto y = solver.dense(grid[next]);
        sol.grid.push_back(grid[next]);
        sol.phi.push_back(y[0]);
        sol.dphi.push_back(y[1]);
        ++next;
      }
      break;
    }
    while (next < grid.size() && grid[next] <= t_new) {
      const auto y = grid[next] == t_new ? solver.state() : solver.dense(grid[next]);
      sol.grid.push_back(grid[next]);
      sol.phi.push_back(y[0]);
      sol.dphi.push_back(y[1]);
      ++next;
    }
  }
  sol.d2phi.reserve(sol.grid.size());
  for (std::size_t i = 0; i < sol.grid.size(); ++i) sol.d2phi.push_back(-profile(sol.grid[i]) * sol.phi[i]);
  sol.accepted_steps = solver.accepted();
  sol.rejected_steps = solver.rejected();
  return sol;
}

template <CurvatureProfile P>
ComparisonSolution solve_comparison_ode(const P& profile, const GridSpec& grid, double tol = 1e-10) {
  return solve_comparison_ode(profile, make_grid(grid), tol);
}

/// Default reporting grid: 2048 uniform nodes on [0, r_max].
template <CurvatureProfile P>
ComparisonSolution solve_comparison_ode(const P& profile, double r_max, double tol = 1e-10) {
  return solve_comparison_ode(profile, uniform_grid(r_max, 2048), tol);
}

// ---------------------------------------------------------------------------
// Closed-form registry
// ---------------------------------------------------------------------------

struct FlatForm {};         // r, K = 0
struct HyperbolicForm {};   // sinh r, K = -1
struct SphericalForm {};    // sin r, K = +1
struct TanhDeltaForm {      // tanh^delta r, K = K_delta
  double delta = 0.1;
};
struct PowerForm {          // r^{alpha+1} - r, K = -h_alpha / r^2 (r > 1)
  double alpha = 1.0;
};
struct TwoExponentForm {    // r^{alpha+1} - r^eps, K = -h_{alpha,eps} / r^2 (r > 1)
  double alpha = 1.0;
  double epsilon = 1.0;
};

using ClosedForm =
    std::variant<FlatForm, HyperbolicForm, SphericalForm, TanhDeltaForm, PowerForm, TwoExponentForm>;

struct Jet {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

inline void validate_closed_form(const ClosedForm& form) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TanhDeltaForm>) {
          if (!(f.delta > 0.0)) throw ParameterError("tanh^delta needs delta > 0");
        } else if constexpr (std::is_same_v<T, PowerForm>) {
          if (!(f.alpha > 0.0)) throw ParameterError("power form needs alpha > 0");
        } else if constexpr (std::is_same_v<T, TwoExponentForm>) {
          if (!(f.alpha > 0.0)) throw ParameterError("two-exponent form needs alpha > 0");
          if (!(f.epsilon > 0.0) || !(f.alpha + 1.0 > f.epsilon)) {
            throw ParameterError("two-exponent form needs 0 < epsilon < alpha + 1");
          }
        }
      },
      form);
}

/// phi, phi', phi'' of a registry member at r.
inline Jet closed_form_jet(const ClosedForm& form, double r) {
  return std::visit(
      [r](const auto& f) -> Jet {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, FlatForm>) {
          return {r, 1.0, 0.0};
        } else if constexpr (std::is_same_v<T, HyperbolicForm>) {
          return {std::sinh(r), std::cosh(r), std::sinh(r)};
        } else if constexpr (std::is_same_v<T, SphericalForm>) {
          return {std::sin(r), std::cos(r), -std::sin(r)};
        } else if constexpr (std::is_same_v<T, TanhDeltaForm>) {
          const double d = f.delta;
          const double t = std::tanh(r);
          const double c = std::cosh(r);
          const double sech2 = 1.0 / (c * c);
          return {std::pow(t, d), d * std::pow(t, d - 1.0) * sech2,
                  d * std::pow(t, d - 2.0) * sech2 * ((d - 1.0) * sech2 - 2.0 * t * t)};
        } else if constexpr (std::is_same_v<T, PowerForm>) {
          const double a = f.alpha;
          return {std::pow(r, a + 1.0) - r, (a + 1.0) * std::pow(r, a) - 1.0,
                  a * (a + 1.0) * std::pow(r, a - 1.0)};
        } else {
          const double a = f.alpha, e = f.epsilon;
          return {std::pow(r, a + 1.0) - std::pow(r, e),
                  (a + 1.0) * std::pow(r, a) - e * std::pow(r, e - 1.0),
                  a * (a + 1.0) * std::pow(r, a - 1.0) - e * (e - 1.0) * std::pow(r, e - 2.0)};
        }
      },
      form);
}

/// Exact evaluation of a registry member on `grid`. The power and two-exponent
/// members solve their ODE only for r > 1; they pair with tail profiles.
inline ComparisonSolution closed_form_solution(const ClosedForm& form, const std::vector<double>& grid) {
  validate_closed_form(form);
  ComparisonSolution sol;
  sol.method = SolutionMethod::ClosedForm;
  sol.grid = grid;
  sol.phi.reserve(grid.size());
  sol.dphi.reserve(grid.size());
  for (double r : grid) {
    const Jet j = closed_form_jet(form, r);
    sol.phi.push_back(j.value);
    sol.dphi.push_back(j.first);
    sol.d2phi.push_back(j.second);
  }
  return sol;
}

/// max |phi'' + K phi| over `grid` using the exact second derivative.
template <CurvatureProfile P>
double closed_form_residual(const ClosedForm& form, const P& profile, const std::vector<double>& grid) {
  validate_closed_form(form);
  double worst = 0.0;
  for (double r : grid) {
    const Jet j = closed_form_jet(form, r);
    worst = std::max(worst, std::abs(j.second + profile(r) * j.value));
  }
  return worst;
}

/// max over interior nodes of |phi'' + K phi| with phi'' from the
/// three-point (possibly non-uniform) central difference.
template <CurvatureProfile P>
double residual(const ComparisonSolution& sol, const P& profile) {
  if (sol.grid.size() < 5) throw ParameterError("residual: need at least 5 nodes");
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < sol.grid.size(); ++i) {
    const double h0 = sol.grid[i] - sol.grid[i - 1];
    const double h1 = sol.grid[i + 1] - sol.grid[i];
    const double d2 = 2.0 * ((sol.phi[i + 1] - sol.phi[i]) / h1 - (sol.phi[i] - sol.phi[i - 1]) / h0) /
                      (h0 + h1);
    worst = std::max(worst, std::abs(d2 + profile(sol.grid[i]) * sol.phi[i]));
  }
  return worst;
}

/// Same stencil as residual(), each node scaled by max(1, |phi''|, |K phi|).
template <CurvatureProfile P>
double relative_residual(const ComparisonSolution& sol, const P& profile) {
  if (sol.grid.size() < 5) throw ParameterError("relative_residual: need at least 5 nodes");
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < sol.grid.size(); ++i) {
    const double h0 = sol.grid[i] - sol.grid[i - 1];
    const double h1 = sol.grid[i + 1] - sol.grid[i];
    const double d2 = 2.0 * ((sol.phi[i + 1] - sol.phi[i]) / h1 - (sol.phi[i] - sol.phi[i - 1]) / h0) /
                      (h0 + h1);
    const double kphi = profile(sol.grid[i]) * sol.phi[i];
    worst = std::max(worst, std::abs(d2 + kphi) / std::max({1.0, std::abs(d2), std::abs(kphi)}));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Volume bound
// ---------------------------------------------------------------------------

/// omega_{n-1} = 2 pi^{n/2} / Gamma(n/2), the area of the unit (n-1)-sphere.
inline double sphere_area_constant(int n) {
  if (n < 2) throw ParameterError("dimension n must be >= 2");
  const double half = 0.5 * n;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

struct VolumeBound {
  std::vector<double> grid;
  std::vector<double> vbar;   // omega_{n-1} int_0^r phi^{n-1}
  std::vector<double> dvbar;  // omega_{n-1} phi(r)^{n-1}, exact at each node
  int dimension = 2;
  double richardson_error = 0.0;
};

inline VolumeBound volume_upper_bound(const ComparisonSolution& sol, int n) {
  const double omega = sphere_area_constant(n);
  if (sol.first_zero) {
    throw ConjugateRadius("comparison function vanishes at r = " + std::to_string(*sol.first_zero) +
                          "; the volume bound is only valid before it");
  }
  VolumeBound vb;
  vb.grid = sol.grid;
  vb.dimension = n;
  const std::size_t m = sol.phi.size();
  const bool have_second = sol.d2phi.size() == m;
  std::vector<double> df(m), d2f(have_second ? m : 0);
  vb.dvbar.reserve(m);
  const double k = n - 1;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = std::max(sol.phi[i], 0.0);
    const double dp = sol.dphi[i];
    vb.dvbar.push_back(omega * std::pow(p, k));
    df[i] = omega * k * std::pow(p, k - 1) * dp;
    if (have_second) {
      const double curv = n > 2 ? (k - 1) * std::pow(p, k - 2) * dp * dp : 0.0;
      d2f[i] = omega * k * (curv + std::pow(p, k - 1) * sol.d2phi[i]);
    }
  }
  vb.vbar = cumulative_hermite(vb.grid, vb.dvbar, df, d2f);
  vb.richardson_error = hermite_richardson_error(vb.grid, vb.dvbar, df, d2f);
  return vb;
}

// ---------------------------------------------------------------------------
// Tail dominance
// ---------------------------------------------------------------------------

struct TailDominance {
  double beta = 0.0;
  double attained_at = 0.0;
  /// d(ratio)/d(log r) over the final decade, relative to the last ratio.
  double trend_rate = 0.0;
  bool stabilizing = true;
};

/// beta = max_{r_i > R0} g(r_i) / f(r_i) on a shared grid.
inline TailDominance tail_dominance(const std::vector<double>& grid, const std::vector<double>& g,
                                    const std::vector<double>& f, double r0,
                                    double trend_tolerance = 0.01) {
  if (grid.size() != g.size() || grid.size() != f.size()) {
    throw ParameterError("tail_dominance: samples must share the grid");
  }
  const auto first = static_cast<std::size_t>(
      std::lower_bound(grid.begin(), grid.end(), r0) - grid.begin());
  if (first + 2 >= grid.size()) throw PreconditionError("tail_dominance: fewer than 3 nodes past R0");
  if (f[first] < 0.0 || f[first + 1] - f[first] < 0.0) {
    throw PreconditionError("tail_dominance: need f(R0) >= 0 and f'(R0) >= 0");
  }
  TailDominance out;
  out.beta = -std::numeric_limits<double>::infinity();
  std::vector<double> log_r, ratio;
  const double decade_start = grid.back() / 10.0;
  for (std::size_t i = first; i < grid.size(); ++i) {
    if (!(grid[i] > r0)) continue;
    if (!(f[i] > 0.0)) {
      throw PreconditionError("tail_dominance: f is not positive at r = " + std::to_string(grid[i]));
    }
    const double q = g[i] / f[i];
    if (q > out.beta) {
      out.beta = q;
      out.attained_at = grid[i];
    }
    if (grid[i] >= decade_start) {
      log_r.push_back(std::log(grid[i]));
      ratio.push_back(q);
    }
  }
  if (ratio.size() >= 3) {
    const LineFit fit = fit_line(log_r, ratio);
    const double scale = std::abs(ratio.back());
    out.trend_rate = scale > 0.0 ? fit.slope / scale : 0.0;
  }
  out.stabilizing = out.trend_rate <= trend_tolerance;
  return out;
}

}  // namespace parabolicity
