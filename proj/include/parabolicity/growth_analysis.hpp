#pragma once

// Volume growth exponent, Holopainen's two divergence criteria
//   int^inf (r / V(r))^{1/(p-1)} dr = inf   or   int^inf (1 / V'(r))^{1/(p-1)} dr = inf
// (either one implies p-parabolicity), and the certificate that ties the
// pipeline together.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parabolicity/comparison_engine.hpp"
#include "parabolicity/curvature_profiles.hpp"
#include "parabolicity/errors.hpp"
#include "parabolicity/grid.hpp"
#include "parabolicity/numerics.hpp"

namespace parabolicity {

struct Window {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Window&, const Window&) = default;
};

inline Window default_window(double r_max) { return {r_max / 10.0, r_max}; }

// ---------------------------------------------------------------------------
// Growth exponent
// ---------------------------------------------------------------------------

struct GrowthEstimate {
  double exponent = 0.0;   // gamma_hat
  double intercept = 0.0;  // log C
  Window window;
  double drift = 0.0;  // slope(upper half) - slope(lower half)
  double fit_residual = 0.0;
  bool unstable = false;
};

namespace detail {

inline void check_window(const std::vector<double>& grid, Window w) {
  if (!(w.lo > 0.0) || !(w.hi > w.lo)) throw WindowError("window must satisfy 0 < lo < hi");
  if (w.hi < 10.0 * w.lo * (1.0 - 1e-12)) {
    throw WindowError("window [" + std::to_string(w.lo) + ", " + std::to_string(w.hi) +
                      "] spans less than one decade");
  }
  if (grid.empty() || w.lo < grid.front() || w.hi > grid.back() * (1.0 + 1e-12)) {
    throw WindowError("window lies outside the grid");
  }
}

// Node range [first, last) covering the window: starts at the last node <= lo.
inline std::pair<std::size_t, std::size_t> window_range(const std::vector<double>& grid, Window w) {
  auto lo = static_cast<std::size_t>(
      std::upper_bound(grid.begin(), grid.end(), w.lo * (1.0 + 1e-12)) - grid.begin());
  if (lo > 0) --lo;
  const auto hi = static_cast<std::size_t>(
      std::upper_bound(grid.begin(), grid.end(), w.hi * (1.0 + 1e-12)) - grid.begin());
  return {lo, hi};
}

}  // namespace detail

/// Least-squares slope of log Vbar against log r on `window`, with drift from
/// refitting the two geometric halves separately.
inline GrowthEstimate fit_growth_exponent(const VolumeBound& vb, Window window,
                                          double stability_threshold = 0.05) {
  detail::check_window(vb.grid, window);
  const auto [lo, hi] = detail::window_range(vb.grid, window);
  if (hi - lo < 8) throw WindowError("window holds fewer than 8 grid nodes");
  std::vector<double> x, y;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!(vb.vbar[i] > 0.0)) throw PreconditionError("volume bound is not positive on the window");
    x.push_back(std::log(vb.grid[i]));
    y.push_back(std::log(vb.vbar[i]));
  }
  const LineFit whole = fit_line(x, y);
  const double split = 0.5 * (std::log(window.lo) + std::log(window.hi));
  const auto mid = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), split) - x.begin());
  if (mid < 3 || x.size() - mid < 3) throw WindowError("window halves hold too few nodes for a drift fit");
  const LineFit lower = fit_line(std::span(x).first(mid), std::span(y).first(mid));
  const LineFit upper = fit_line(std::span(x).subspan(mid), std::span(y).subspan(mid));

  GrowthEstimate est;
  est.exponent = whole.slope;
  est.intercept = whole.intercept;
  est.window = window;
  est.drift = upper.slope - lower.slope;
  est.fit_residual = whole.max_residual;
  est.unstable = std::abs(est.drift) > stability_threshold;
  return est;
}

// ---------------------------------------------------------------------------
// Holopainen integrands
// ---------------------------------------------------------------------------

enum class HolopainenForm { VolumeIntegral, DerivativeIntegral };

inline std::string to_string(HolopainenForm form) {
  return form == HolopainenForm::VolumeIntegral ? "volume" : "derivative";
}

/// log of the integrand: log(r / V) / (p - 1) or log(1 / V') / (p - 1).
/// Working in logs keeps large p-ranges and steep growth finite.
inline double log_holopainen_integrand(double r, double v, double dv, double p, HolopainenForm form) {
  if (!(p > 1.0)) throw ParameterError("Holopainen criteria need p > 1");
  if (form == HolopainenForm::VolumeIntegral) {
    if (!(v > 0.0) || !(r > 0.0)) throw PreconditionError("VolumeIntegral needs V(r) > 0 and r > 0");
    return (std::log(r) - std::log(v)) / (p - 1.0);
  }
  if (!(dv > 0.0)) throw PreconditionError("DerivativeIntegral needs V'(r) > 0");
  return -std::log(dv) / (p - 1.0);
}

inline double holopainen_integrand(double r, double v, double dv, double p, HolopainenForm form) {
  return std::exp(log_holopainen_integrand(r, v, dv, p, form));
}

/// Integrand at radius r; Vbar between nodes from the cubic Hermite
/// interpolant on (Vbar, Vbar'), Vbar' linearly.
inline double holopainen_integrand(const VolumeBound& vb, double p, double r, HolopainenForm form) {
  if (r < vb.grid.front() || r > vb.grid.back()) throw DomainError("radius outside the volume grid");
  auto it = std::lower_bound(vb.grid.begin(), vb.grid.end(), r);
  auto i = static_cast<std::size_t>(it - vb.grid.begin());
  if (vb.grid[i] == r) return holopainen_integrand(r, vb.vbar[i], vb.dvbar[i], p, form);
  const std::size_t j = i - 1;
  const double h = vb.grid[i] - vb.grid[j];
  const double t = (r - vb.grid[j]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  const double v = h00 * vb.vbar[j] + h10 * h * vb.dvbar[j] + h01 * vb.vbar[i] + h11 * h * vb.dvbar[i];
  const double dv = (1 - t) * vb.dvbar[j] + t * vb.dvbar[i];
  return holopainen_integrand(r, v, dv, p, form);
}

// ---------------------------------------------------------------------------
// Divergence classification
// ---------------------------------------------------------------------------

enum class Divergence { Divergent, Convergent, Inconclusive };

inline std::string to_string(Divergence d) {
  switch (d) {
    case Divergence::Divergent: return "divergent";
    case Divergence::Convergent: return "convergent";
    case Divergence::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct ClassifierOptions {
  double margin = 0.02;            // m: slopes within -1 +- m escalate
  double log_factor = 10.0;        // required constant-fit / log-fit residual ratio
  double slope_tolerance = 1e-3;   // escalation never certifies slopes below -1 - this

  friend bool operator==(const ClassifierOptions&, const ClassifierOptions&) = default;
};

struct DivergenceReport {
  Divergence verdict = Divergence::Inconclusive;
  double slope = 0.0;
  bool escalated = false;
  double log_fit_residual = 0.0;
  double constant_fit_residual = 0.0;
};

/// Classifies int^inf g on a tail sample given as (r_i, log g_i).
/// Local log-log slope s: s >= -1 + m diverges, s <= -1 - m converges. In the
/// band the partial integral is fitted by a log r + b and by a constant; a
/// clearly logarithmic partial integral with s >= -1 - slope_tolerance counts
/// as divergent, anything else is inconclusive.
inline DivergenceReport classify_divergence_log(const std::vector<double>& r,
                                                const std::vector<double>& log_g,
                                                const ClassifierOptions& opts = {}) {
  DivergenceReport rep;
  if (r.size() != log_g.size() || r.size() < 5 || !(r.front() > 0.0) ||
      r.back() < 10.0 * r.front() * (1.0 - 1e-12)) {
    return rep;
  }
  for (double v : log_g) {
    if (!std::isfinite(v)) return rep;
  }
  std::vector<double> log_r(r.size());
  std::transform(r.begin(), r.end(), log_r.begin(), [](double v) { return std::log(v); });
  rep.slope = fit_line(log_r, log_g).slope;

  if (rep.slope >= -1.0 + opts.margin) {
    rep.verdict = Divergence::Divergent;
    return rep;
  }
  if (rep.slope <= -1.0 - opts.margin) {
    rep.verdict = Divergence::Convergent;
    return rep;
  }

  rep.escalated = true;
  const double top = *std::max_element(log_g.begin(), log_g.end());
  std::vector<double> partial(r.size(), 0.0);
  double prev = std::exp(log_g[0] - top);
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double cur = std::exp(log_g[i] - top);
    partial[i] = partial[i - 1] + 0.5 * (r[i] - r[i - 1]) * (prev + cur);
    prev = cur;
  }
  rep.log_fit_residual = fit_line(log_r, partial).rms_residual;
  double mean = 0.0;
  for (double v : partial) mean += v;
  mean /= static_cast<double>(partial.size());
  double ss = 0.0;
  for (double v : partial) ss += (v - mean) * (v - mean);
  rep.constant_fit_residual = std::sqrt(ss / static_cast<double>(partial.size()));

  const bool logarithmic = rep.constant_fit_residual > opts.log_factor * rep.log_fit_residual;
  rep.verdict = logarithmic && rep.slope >= -1.0 - opts.slope_tolerance ? Divergence::Divergent
                                                                         : Divergence::Inconclusive;
  return rep;
}

/// Same, from plain samples g_i > 0. Non-positive samples make the call inconclusive.
inline DivergenceReport classify_divergence(const std::vector<double>& r, const std::vector<double>& g,
                                            const ClassifierOptions& opts = {}) {
  std::vector<double> log_g(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g[i] > 0.0)) return {};
    log_g[i] = std::log(g[i]);
  }
  return classify_divergence_log(r, log_g, opts);
}

/// (r_i, log integrand_i) over the nodes of `window`.
inline std::pair<std::vector<double>, std::vector<double>> holopainen_tail(const VolumeBound& vb, double p,
                                                                           HolopainenForm form,
                                                                           Window window) {
  const auto [lo, hi] = detail::window_range(vb.grid, window);
  std::vector<double> r, lg;
  for (std::size_t i = lo; i < hi; ++i) {
    r.push_back(vb.grid[i]);
    lg.push_back(log_holopainen_integrand(vb.grid[i], vb.vbar[i], vb.dvbar[i], p, form));
  }
  return {std::move(r), std::move(lg)};
}

// ---------------------------------------------------------------------------
// Certificate
// ---------------------------------------------------------------------------

enum class Verdict { Certified, NotCertified, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Certified: return "certified";
    case Verdict::NotCertified: return "not_certified";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

/// Which Holopainen form(s) fired.
enum class CriterionUsed { None, VolumeIntegral, DerivativeIntegral, Both };

inline std::string to_string(CriterionUsed c) {
  switch (c) {
    case CriterionUsed::None: return "none";
    case CriterionUsed::VolumeIntegral: return "volume";
    case CriterionUsed::DerivativeIntegral: return "derivative";
    case CriterionUsed::Both: return "both";
  }
  return "none";
}

struct PVerdict {
  double p = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  CriterionUsed form = CriterionUsed::None;
  DivergenceReport volume;
  DivergenceReport derivative;
};

struct ThresholdSweep {
  std::size_t points = 64;
  double lo = 1.01;
  double hi_factor = 4.0;  // grid upper end = hi_factor * gamma_hat
  double resolution = 0.01;

  friend bool operator==(const ThresholdSweep&, const ThresholdSweep&) = default;
};

struct CertifyOptions {
  GridSpec grid;
  double ode_tol = 1e-10;
  ClassifierOptions classifier;
  double stability_threshold = 0.05;
  std::optional<Window> window;
  std::vector<double> p_values;
  ThresholdSweep sweep;
};

struct CertificateAudit {
  GridSpec grid;
  std::size_t grid_nodes = 0;
  double ode_tol = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  double ode_residual = 0.0;
  double ode_relative_residual = 0.0;
  double richardson_error = 0.0;
  double fit_residual = 0.0;
  Window window;
  ClassifierOptions classifier;
  double stability_threshold = 0.0;
  std::optional<double> glue_start;
  std::optional<double> blend_floor;
  std::optional<double> delta;
  std::optional<double> domination_radius;
  std::optional<TailDominance> tail_dominance;
  std::string comparison_profile;
};

struct ParabolicityCertificate {
  std::string profile;
  int dimension = 2;
  GrowthEstimate growth;
  CriterionUsed criterion_used = CriterionUsed::None;
  std::optional<double> threshold;  // p*; 1 encodes "all p > 1"
  std::vector<PVerdict> verdicts;
  CertificateAudit audit;
};

/// Verdict for one p from both integral forms on the growth window.
inline PVerdict evaluate_p(const VolumeBound& vb, const GrowthEstimate& growth, double p,
                           const ClassifierOptions& opts) {
  if (!(p > 1.0)) throw ParameterError("p must be > 1");
  PVerdict out;
  out.p = p;
  {
    const auto [r, lg] = holopainen_tail(vb, p, HolopainenForm::VolumeIntegral, growth.window);
    out.volume = classify_divergence_log(r, lg, opts);
  }
  {
    const auto [r, lg] = holopainen_tail(vb, p, HolopainenForm::DerivativeIntegral, growth.window);
    out.derivative = classify_divergence_log(r, lg, opts);
  }
  const bool vol = out.volume.verdict == Divergence::Divergent;
  const bool der = out.derivative.verdict == Divergence::Divergent;
  out.form = vol && der ? CriterionUsed::Both
             : vol      ? CriterionUsed::VolumeIntegral
             : der      ? CriterionUsed::DerivativeIntegral
                        : CriterionUsed::None;
  if (vol || der) {
    out.verdict = growth.unstable ? Verdict::Inconclusive : Verdict::Certified;
  } else if (out.volume.verdict == Divergence::Convergent &&
             out.derivative.verdict == Divergence::Convergent) {
    out.verdict = Verdict::NotCertified;
  } else {
    out.verdict = Verdict::Inconclusive;
  }
  return out;
}

/// Smallest certified p on a geometric sweep, refined by bisection. Returns
/// 1 when the first sweep point already certifies, nullopt when none does.
inline std::optional<double> find_threshold(const VolumeBound& vb, const GrowthEstimate& growth,
                                            const ClassifierOptions& opts, const ThresholdSweep& sweep) {
  const double hi = std::max(sweep.hi_factor * growth.exponent, 2.0 * sweep.lo);
  const auto certified = [&](double p) {
    return evaluate_p(vb, growth, p, opts).verdict == Verdict::Certified;
  };
  const std::size_t m = std::max<std::size_t>(sweep.points, 2);
  const double ratio = std::pow(hi / sweep.lo, 1.0 / static_cast<double>(m - 1));
  double prev = sweep.lo;
  for (std::size_t k = 0; k < m; ++k) {
    const double p = k + 1 == m ? hi : sweep.lo * std::pow(ratio, static_cast<double>(k));
    if (certified(p)) {
      if (k == 0) return 1.0;
      double lo = prev, up = p;
      while (up - lo > sweep.resolution) {
        const double mid = 0.5 * (lo + up);
        (certified(mid) ? up : lo) = mid;
      }
      return up;
    }
    prev = p;
  }
  return std::nullopt;
}

namespace detail {

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (Error& e) {
    if (e.stage().empty()) e.set_stage(stage);
    throw;
  }
}

inline std::optional<ClosedForm> tail_closed_form(const ProfileSpec& spec, const BuiltProfile& built) {
  if (std::holds_alternative<Sech2Decay>(spec.family) || std::holds_alternative<KDelta>(spec.family)) {
    return TanhDeltaForm{*built.delta};
  }
  if (const auto* pw = std::get_if<PowerDecay>(&spec.family)) return PowerForm{pw->alpha};
  if (const auto* te = std::get_if<TwoExponent>(&spec.family)) {
    return TwoExponentForm{te->alpha, te->epsilon};
  }
  return std::nullopt;
}

}  // namespace detail

/// Full pipeline: glued profile -> comparison ODE -> volume bound -> growth fit
/// -> both Holopainen forms for every requested p, plus the threshold p*.
inline ParabolicityCertificate certify(const ProfileSpec& spec, int n, const CertifyOptions& opts) {
  const BuiltProfile built = detail::run_stage("profile", [&] { return build_comparison_profile(spec, n); });
  const ComparisonSolution sol =
      detail::run_stage("solve", [&] { return solve_comparison_ode(built.profile, opts.grid, opts.ode_tol); });
  const VolumeBound vb = detail::run_stage("volume", [&] { return volume_upper_bound(sol, n); });
  const Window window = opts.window.value_or(default_window(vb.grid.back()));
  const GrowthEstimate growth = detail::run_stage(
      "growth", [&] { return fit_growth_exponent(vb, window, opts.stability_threshold); });

  ParabolicityCertificate cert;
  cert.profile = built.hypothesis;
  cert.dimension = n;
  cert.growth = growth;
  detail::run_stage("criteria", [&] {
    for (double p : opts.p_values) cert.verdicts.push_back(evaluate_p(vb, growth, p, opts.classifier));
    cert.threshold = find_threshold(vb, growth, opts.classifier, opts.sweep);
    if (cert.threshold) {
      const double at = std::max(*cert.threshold, opts.sweep.lo);
      cert.criterion_used = evaluate_p(vb, growth, at, opts.classifier).form;
    }
    return 0;
  });

  CertificateAudit& audit = cert.audit;
  audit.grid = opts.grid;
  audit.grid_nodes = sol.grid.size();
  audit.ode_tol = opts.ode_tol;
  audit.accepted_steps = sol.accepted_steps;
  audit.rejected_steps = sol.rejected_steps;
  audit.ode_residual = residual(sol, built.profile);
  audit.ode_relative_residual = relative_residual(sol, built.profile);
  audit.richardson_error = vb.richardson_error;
  audit.fit_residual = growth.fit_residual;
  audit.window = window;
  audit.classifier = opts.classifier;
  audit.stability_threshold = opts.stability_threshold;
  audit.glue_start = built.glue_start;
  audit.blend_floor = built.blend_floor;
  audit.delta = built.delta;
  audit.domination_radius = built.domination_radius;
  audit.comparison_profile = built.profile.describe();
  if (const auto form = detail::tail_closed_form(spec, built); form && built.glue_start) {
    // Compare the solved phi with the closed-form tail solution past R0 = R + 1.
    const auto closed = closed_form_solution(*form, sol.grid);
    try {
      audit.tail_dominance = tail_dominance(sol.grid, sol.phi, closed.phi, *built.glue_start + 1.0);
    } catch (const PreconditionError&) {
      audit.tail_dominance.reset();
    }
  }
  return cert;
}

/// Closed-form threshold: sech^2 decay gives every p > 1 (encoded as 1); the
/// r^-2 families give (alpha + 1)(n - 1) + 1.
inline double analytic_threshold(const ProfileFamily& family, int n) {
  if (n < 2) throw ParameterError("dimension n must be >= 2");
  if (std::holds_alternative<Sech2Decay>(family)) return 1.0;
  if (const auto* pw = std::get_if<PowerDecay>(&family)) return (pw->alpha + 1.0) * (n - 1) + 1.0;
  if (const auto* te = std::get_if<TwoExponent>(&family)) return (te->alpha + 1.0) * (n - 1) + 1.0;
  throw ParameterError("analytic threshold is only known for sech2, power and two-exponent families");
}

}  // namespace parabolicity
