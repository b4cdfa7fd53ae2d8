#pragma once

// Radial curvature lower-bound profiles r -> K(r) and the smooth glued
// profile used to turn a tail bound into a global one.
//
// Profiles are per-direction bounds: Ric >= (n-1) K(r). The decay families
// are still consumed "as is" (K = -h_alpha/r^2, K = alpha sech^2), since a
// weaker K only enlarges the volume bound.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <math.h>  // boost pchip calls unqualified isnan

#include <boost/math/interpolators/pchip.hpp>

#include "parabolicity/errors.hpp"

namespace parabolicity {

/// Anything that maps a radius to a curvature value.
template <class P>
concept CurvatureProfile = requires(const P& p, double r) {
  { p(r) } -> std::convertible_to<double>;
};

enum class Normalization { PerDirection, Total };

// ---------------------------------------------------------------------------
// Closed-form families
// ---------------------------------------------------------------------------

/// h_alpha(r) = alpha (alpha + 1) r^alpha / (r^alpha - 1), defined for r > 1.
inline double power_decay_h(double alpha, double r) {
  if (!(r > 1.0)) throw DomainError("power decay is singular for r <= 1; raise glue_start");
  const double ra = std::pow(r, alpha);
  return alpha * (alpha + 1.0) * ra / (ra - 1.0);
}

/// K(r) = -h_alpha(r) / r^2.
inline double eval_power_decay(double alpha, double r) {
  return -power_decay_h(alpha, r) / (r * r);
}

/// Two-exponent family: -h_{alpha,eps}(r)/r^2 with
/// h_{alpha,eps}(r) = (alpha(alpha+1) r^{alpha+1} - eps(eps-1) r^eps) / (r^{alpha+1} - r^eps),
/// the curvature whose comparison solution is r^{alpha+1} - r^eps.
/// eps = 1 recovers the power decay family.
inline double eval_two_exponent(double alpha, double epsilon, double r) {
  if (!(alpha > 0.0) || !(epsilon > 0.0)) {
    throw ParameterError("two-exponent family needs alpha > 0 and epsilon > 0");
  }
  if (!(alpha + 1.0 > epsilon)) {
    throw ParameterError("two-exponent family needs alpha + 1 > epsilon");
  }
  if (!(r > 1.0)) throw DomainError("two-exponent family is singular for r <= 1");
  const double top = std::pow(r, alpha + 1.0);
  const double low = std::pow(r, epsilon);
  const double h =
      (alpha * (alpha + 1.0) * top - epsilon * (epsilon - 1.0) * low) / (top - low);
  return -h / (r * r);
}

inline double eval_sech2(double alpha, double r) {
  const double c = std::cosh(r);
  return alpha / (c * c);
}

/// K_delta(r) = -delta csch^2(r) (-1 + delta sech^2(r) - tanh^2(r)).
/// This is exactly -phi''/phi for phi = tanh^delta.
inline double eval_k_delta(double delta, double r) {
  if (!(r > 0.0)) throw DomainError("K_delta is singular at r = 0");
  const double s = std::sinh(r);
  const double c = std::cosh(r);
  const double t = std::tanh(r);
  const double csch2 = 1.0 / (s * s);
  const double sech2 = 1.0 / (c * c);
  return -delta * csch2 * (-1.0 + delta * sech2 - t * t);
}

// ---------------------------------------------------------------------------
// RadialCurvatureProfile
// ---------------------------------------------------------------------------

struct Constant {
  double value = 0.0;

  friend bool operator==(const Constant&, const Constant&) = default;
};
struct Sech2Decay {
  double alpha = 1.0;

  friend bool operator==(const Sech2Decay&, const Sech2Decay&) = default;
};
struct KDelta {
  double delta = 0.1;

  friend bool operator==(const KDelta&, const KDelta&) = default;
};
struct PowerDecay {
  double alpha = 1.0;

  friend bool operator==(const PowerDecay&, const PowerDecay&) = default;
};
struct TwoExponent {
  double alpha = 1.0;
  double epsilon = 1.0;

  friend bool operator==(const TwoExponent&, const TwoExponent&) = default;
};
/// Samples (r_i, K_i), r strictly increasing, at least four points.
struct Tabulated {
  std::vector<double> r;
  std::vector<double> k;

  friend bool operator==(const Tabulated&, const Tabulated&) = default;
};

using ProfileFamily = std::variant<Constant, Sech2Decay, KDelta, PowerDecay, TwoExponent, Tabulated>;

/// Default start of the domain for the r^-2 families, away from the r = 1 pole.
inline constexpr double kPowerDomainStart = 2.0;

class RadialCurvatureProfile {
 public:
  explicit RadialCurvatureProfile(ProfileFamily family,
                                  std::optional<double> domain_start = std::nullopt,
                                  Normalization normalization = Normalization::PerDirection,
                                  int dimension = 2)
      : family_(std::move(family)), normalization_(normalization), dimension_(dimension) {
    validate_parameters();
    domain_start_ = domain_start.value_or(default_domain_start());
    if (is_power_like() && !(domain_start_ > 1.0)) {
      throw ParameterError("power and two-exponent profiles need domain_start > 1");
    }
    if (normalization_ == Normalization::Total && dimension_ < 2) {
      throw ParameterError("total normalization needs a dimension n >= 2");
    }
    if (const auto* tab = std::get_if<Tabulated>(&family_)) {
      std::vector<double> x = tab->r;
      std::vector<double> y = tab->k;
      interpolant_ = std::make_shared<const boost::math::interpolators::pchip<std::vector<double>>>(
          std::move(x), std::move(y));
      domain_start_ = std::max(domain_start_, tab->r.front());
      domain_end_ = tab->r.back();
    }
  }

  static RadialCurvatureProfile constant(double value) {
    return RadialCurvatureProfile(Constant{value});
  }

  const ProfileFamily& family() const noexcept { return family_; }
  double domain_start() const noexcept { return domain_start_; }
  double domain_end() const noexcept { return domain_end_; }
  Normalization normalization() const noexcept { return normalization_; }

  bool in_domain(double r) const noexcept {
    if (r < domain_start_ || r > domain_end_) return false;
    if (std::holds_alternative<KDelta>(family_) && !(r > 0.0)) return false;
    if (is_power_like() && !(r > 1.0)) return false;
    return true;
  }

  /// Per-direction curvature bound at r. Throws DomainError outside the domain;
  /// tabulated profiles never extrapolate.
  double operator()(double r) const {
    if (!in_domain(r)) {
      throw DomainError("radius " + std::to_string(r) + " outside profile domain [" +
                        std::to_string(domain_start_) + ", " + std::to_string(domain_end_) + "]");
    }
    const double raw = std::visit([&](const auto& f) { return raw_value(f, r); }, family_);
    return normalization_ == Normalization::Total ? raw / (dimension_ - 1) : raw;
  }

  std::string describe() const;

 private:
  bool is_power_like() const noexcept {
    return std::holds_alternative<PowerDecay>(family_) ||
           std::holds_alternative<TwoExponent>(family_);
  }

  double default_domain_start() const noexcept {
    return is_power_like() ? kPowerDomainStart : 0.0;
  }

  void validate_parameters() const {
    std::visit(
        [](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Constant>) {
            if (!std::isfinite(f.value)) throw ParameterError("constant profile must be finite");
          } else if constexpr (std::is_same_v<T, Sech2Decay> || std::is_same_v<T, PowerDecay>) {
            if (!(f.alpha > 0.0)) throw ParameterError("alpha must be positive");
          } else if constexpr (std::is_same_v<T, KDelta>) {
            if (!(f.delta > 0.0)) throw ParameterError("delta must be positive");
          } else if constexpr (std::is_same_v<T, TwoExponent>) {
            if (!(f.alpha > 0.0) || !(f.epsilon > 0.0) || !(f.alpha + 1.0 > f.epsilon)) {
              throw ParameterError("two-exponent needs alpha > 0, epsilon > 0, alpha + 1 > epsilon");
            }
          } else {
            if (f.r.size() != f.k.size() || f.r.size() < 4) {
              throw ParameterError("tabulated profile needs >= 4 (r, K) samples");
            }
            for (std::size_t i = 1; i < f.r.size(); ++i) {
              if (!(f.r[i] > f.r[i - 1])) {
                throw ParameterError("tabulated radii must be strictly increasing");
              }
            }
          }
        },
        family_);
  }

  double raw_value(const Constant& f, double) const { return f.value; }
  double raw_value(const Sech2Decay& f, double r) const { return eval_sech2(f.alpha, r); }
  double raw_value(const KDelta& f, double r) const { return eval_k_delta(f.delta, r); }
  double raw_value(const PowerDecay& f, double r) const { return eval_power_decay(f.alpha, r); }
  double raw_value(const TwoExponent& f, double r) const {
    return eval_two_exponent(f.alpha, f.epsilon, r);
  }
  double raw_value(const Tabulated&, double r) const { return (*interpolant_)(r); }

  ProfileFamily family_;
  Normalization normalization_;
  int dimension_;
  double domain_start_ = 0.0;
  double domain_end_ = std::numeric_limits<double>::infinity();
  std::shared_ptr<const boost::math::interpolators::pchip<std::vector<double>>> interpolant_;
};

inline std::string RadialCurvatureProfile::describe() const {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return "constant(" + std::to_string(f.value) + ")";
        } else if constexpr (std::is_same_v<T, Sech2Decay>) {
          return "sech2(alpha=" + std::to_string(f.alpha) + ")";
        } else if constexpr (std::is_same_v<T, KDelta>) {
          return "k_delta(delta=" + std::to_string(f.delta) + ")";
        } else if constexpr (std::is_same_v<T, PowerDecay>) {
          return "power(alpha=" + std::to_string(f.alpha) + ")";
        } else if constexpr (std::is_same_v<T, TwoExponent>) {
          return "two_exponent(alpha=" + std::to_string(f.alpha) +
                 ", epsilon=" + std::to_string(f.epsilon) + ")";
        } else {
          return "tabulated(" + std::to_string(f.r.size()) + " samples)";
        }
      },
      family_);
}

// ---------------------------------------------------------------------------
// Glued profile
// ---------------------------------------------------------------------------

/// Quintic smoothstep 6t^5 - 15t^4 + 10t^3; first and second derivatives
/// vanish at t = 0 and t = 1.
inline double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

namespace detail {

// Minimum of a profile on [a, b]: dense sampling, then golden-section polish
// around the best sample.
template <CurvatureProfile P>
double minimum_on(const P& profile, double a, double b) {
  constexpr int samples = 4000;
  int best = 0;
  double best_value = profile(a);
  for (int i = 1; i <= samples; ++i) {
    const double v = profile(a + (b - a) * i / samples);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  double lo = a + (b - a) * std::max(best - 1, 0) / samples;
  double hi = a + (b - a) * std::min(best + 1, samples) / samples;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = profile(x1), f2 = profile(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = profile(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = profile(x2);
    }
  }
  return std::min({best_value, f1, f2});
}

}  // namespace detail

/// Smooth global profile: B on [0, R], a C^2 blend on [R, R+1], the tail beyond.
///
/// With floor c = min(B, min_{[R,R+1]} tail):
///  - if B == c the blend is (1-s) B + s K(r), so f <= K on the whole annulus;
///  - otherwise the blend dips from B to c on [R, R+1/2] and rises from c to
///    K(r) on [R+1/2, R+1]. Continuity at R then forces f(R) = B > K(R), so
///    only f <= max(B, K) is guaranteed near R.
class GluedProfile {
 public:
  GluedProfile(double core_bound, double glue_start, RadialCurvatureProfile tail)
      : core_bound_(core_bound), glue_start_(glue_start), tail_(std::move(tail)) {
    if (!std::isfinite(core_bound_)) throw ParameterError("core bound B must be finite");
    if (glue_start_ < tail_.domain_start() || !tail_.in_domain(glue_start_)) {
      throw DomainError("glue start R = " + std::to_string(glue_start_) +
                        " precedes the tail domain start " +
                        std::to_string(tail_.domain_start()));
    }
    if (std::isfinite(tail_.domain_end())) {
      throw DomainError("tail profile is undefined beyond r = " +
                        std::to_string(tail_.domain_end()) + "; a glued tail must cover [R, inf)");
    }
    floor_ = std::min(core_bound_, detail::minimum_on(tail_, glue_start_, glue_start_ + 1.0));
  }

  double core_bound() const noexcept { return core_bound_; }
  double glue_start() const noexcept { return glue_start_; }
  double blend_floor() const noexcept { return floor_; }
  bool dips() const noexcept { return floor_ < core_bound_; }
  const RadialCurvatureProfile& tail() const noexcept { return tail_; }

  double operator()(double r) const {
    if (r <= glue_start_) return core_bound_;
    if (r >= glue_start_ + 1.0) return tail_(r);
    const double t = r - glue_start_;
    if (!dips()) {
      const double s = smoothstep5(t);
      return (1.0 - s) * core_bound_ + s * tail_(r);
    }
    if (t <= 0.5) {
      const double s = smoothstep5(2.0 * t);
      return (1.0 - s) * core_bound_ + s * floor_;
    }
    const double s = smoothstep5(2.0 * t - 1.0);
    return (1.0 - s) * floor_ + s * tail_(r);
  }

  std::string describe() const {
    return "glued(B=" + std::to_string(core_bound_) + ", R=" + std::to_string(glue_start_) +
           ", tail=" + tail_.describe() + ")";
  }

 private:
  double core_bound_;
  double glue_start_;
  RadialCurvatureProfile tail_;
  double floor_ = 0.0;
};

inline GluedProfile build_glued_profile(double core_bound, double glue_start,
                                        RadialCurvatureProfile tail) {
  return GluedProfile(core_bound, glue_start, std::move(tail));
}

/// Runtime choice between a bare profile and a glued one.
class AnyProfile {
 public:
  AnyProfile(RadialCurvatureProfile p) : impl_(std::move(p)) {}  // NOLINT
  AnyProfile(GluedProfile p) : impl_(std::move(p)) {}            // NOLINT

  double operator()(double r) const {
    return std::visit([r](const auto& p) { return p(r); }, impl_);
  }
  std::string describe() const {
    return std::visit([](const auto& p) { return p.describe(); }, impl_);
  }
  const GluedProfile* glued() const noexcept { return std::get_if<GluedProfile>(&impl_); }

 private:
  std::variant<RadialCurvatureProfile, GluedProfile> impl_;
};

// ---------------------------------------------------------------------------
// Domination radius for the sech^2 proof
// ---------------------------------------------------------------------------

/// K_delta(r) / (alpha sech^2(r)), written to stay finite for large r.
inline double k_delta_sech2_ratio(double alpha, double delta, double r) {
  const double t = std::tanh(r);
  const double c = std::cosh(r);
  const double sech2 = 1.0 / (c * c);
  const double coth2 = 1.0 / (t * t);
  return delta / alpha * coth2 * (1.0 + t * t - delta * sech2);
}

struct DominationSearch {
  double step = 0.01;
  double search_cap = 100.0;
};

/// Smallest grid radius r_delta such that K_delta(s) <= alpha sech^2(s) on
/// every grid node s in [r_delta, 3 r_delta]; beyond that the ratio has
/// settled near its limit 2 delta / alpha < 1.
inline double find_domination_radius(double alpha, double delta, DominationSearch search = {}) {
  if (!(alpha > 0.0) || !(delta > 0.0) || !(delta < alpha / 2.0)) {
    throw ParameterError("domination radius needs 0 < delta < alpha/2");
  }
  const auto count = static_cast<std::size_t>(std::ceil(3.0 * search.search_cap / search.step));
  // next_bad[i]: first node index j >= i (radius j*step) where the check fails.
  std::vector<std::size_t> next_bad(count + 2, count + 1);
  for (std::size_t i = count; i >= 1; --i) {
    const double r = search.step * static_cast<double>(i);
    const bool ok = k_delta_sech2_ratio(alpha, delta, r) <= 1.0;
    next_bad[i] = ok ? next_bad[i + 1] : i;
  }
  const auto cap = static_cast<std::size_t>(search.search_cap / search.step);
  for (std::size_t i = 1; i <= cap; ++i) {
    if (next_bad[i] > 3 * i) return search.step * static_cast<double>(i);
  }
  throw NotFound("no domination radius below " + std::to_string(search.search_cap) +
                 " (delta too close to alpha/2?)");
}

// ---------------------------------------------------------------------------
// Profile specifications (what a run config describes)
// ---------------------------------------------------------------------------

struct GlueSpec {
  double core_bound = 0.0;  // B
  double glue_start = 2.0;  // R

  friend bool operator==(const GlueSpec&, const GlueSpec&) = default;
};

/// A curvature hypothesis as declared by the user. For the sech^2 family the
/// comparison runs on K_delta (delta defaults to 0.4 alpha), glued no earlier
/// than the domination radius r_delta.
struct ProfileSpec {
  ProfileFamily family = Constant{0.0};
  std::optional<GlueSpec> glue;
  std::optional<double> delta;
  std::optional<double> domain_start;
  Normalization normalization = Normalization::PerDirection;

  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

struct BuiltProfile {
  AnyProfile profile;
  std::string hypothesis;
  std::optional<double> glue_start;
  std::optional<double> blend_floor;
  std::optional<double> delta;
  std::optional<double> domination_radius;
};

inline constexpr double kDefaultDeltaFraction = 0.4;

inline BuiltProfile build_comparison_profile(const ProfileSpec& spec, int n) {
  if (n < 2) throw ParameterError("dimension n must be >= 2");
  const auto scale = [&](double v) {
    return spec.normalization == Normalization::Total ? v / (n - 1) : v;
  };
  const RadialCurvatureProfile hypothesis(spec.family, spec.domain_start, spec.normalization, n);
  const bool needs_glue = !std::holds_alternative<Constant>(spec.family) &&
                          !std::holds_alternative<Tabulated>(spec.family);
  if (needs_glue && !spec.glue) {
    throw ParameterError(hypothesis.describe() + " is a tail bound and needs a glue block {B, R}");
  }

  if (const auto* sech = std::get_if<Sech2Decay>(&spec.family)) {
    const double delta = spec.delta.value_or(kDefaultDeltaFraction * sech->alpha);
    const double r_delta = find_domination_radius(sech->alpha, delta);
    const double start = std::max(spec.glue->glue_start, r_delta);
    GluedProfile glued(scale(spec.glue->core_bound), start,
                       RadialCurvatureProfile(KDelta{delta}, std::nullopt, spec.normalization, n));
    const double floor = glued.blend_floor();
    return BuiltProfile{AnyProfile(std::move(glued)), hypothesis.describe(), start, floor, delta, r_delta};
  }
  if (!spec.glue) {
    return BuiltProfile{AnyProfile(hypothesis), hypothesis.describe(), std::nullopt, std::nullopt,
                        std::nullopt, std::nullopt};
  }
  GluedProfile glued(scale(spec.glue->core_bound), spec.glue->glue_start, hypothesis);
  const double floor = glued.blend_floor();
  std::optional<double> delta;
  if (const auto* kd = std::get_if<KDelta>(&spec.family)) delta = kd->delta;
  return BuiltProfile{AnyProfile(std::move(glued)), hypothesis.describe(), spec.glue->glue_start, floor,
                      delta, std::nullopt};
}

}  // namespace parabolicity
