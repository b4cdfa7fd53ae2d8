#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "parabolicity/errors.hpp"

namespace parabolicity {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double max_residual = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterError("fit_line: need two equal-length samples of size >= 2");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ParameterError("fit_line: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

namespace detail {

// Integral over [x0, x1] of the quadratic through (x0, x1, x2).
inline double quadratic_first_interval(double h0, double h1, double f0, double f1,
                                       double f2) {
  const double h = h0 + h1;
  return h0 * (3.0 * h - h0) / (6.0 * h) * f0 + h0 * (3.0 * h - 2.0 * h0) / (6.0 * h1) * f1 -
         h0 * h0 * h0 / (6.0 * h * h1) * f2;
}

inline double simpson_pair(double h0, double h1, double f0, double f1, double f2) {
  const double h = h0 + h1;
  return h / 6.0 *
         ((2.0 - h1 / h0) * f0 + h * h / (h0 * h1) * f1 + (2.0 - h0 / h1) * f2);
}

}  // namespace detail

/// Cumulative composite Simpson integral on an arbitrary increasing grid.
/// Even nodes accumulate full Simpson pairs; odd nodes take the quadratic
/// through their pair over the first interval. For a nonnegative integrand
/// the odd-node values are clamped into the bracket set by their neighbours,
/// so the result is nondecreasing even where the grid under-resolves f.
inline std::vector<double> cumulative_simpson(std::span<const double> x,
                                              std::span<const double> f) {
  const std::size_t n = x.size();
  if (n != f.size() || n < 2) {
    throw ParameterError("cumulative_simpson: need equal-length samples of size >= 2");
  }
  const bool nonnegative = std::all_of(f.begin(), f.end(), [](double v) { return v >= 0.0; });
  std::vector<double> out(n, 0.0);
  if (n == 2) {
    out[1] = 0.5 * (x[1] - x[0]) * (f[0] + f[1]);
    return out;
  }
  std::size_t k = 0;
  for (; k + 2 < n; k += 2) {
    const double h0 = x[k + 1] - x[k];
    const double h1 = x[k + 2] - x[k + 1];
    out[k + 2] = out[k] + detail::simpson_pair(h0, h1, f[k], f[k + 1], f[k + 2]);
    double mid = out[k] + detail::quadratic_first_interval(h0, h1, f[k], f[k + 1], f[k + 2]);
    if (nonnegative) mid = std::clamp(mid, out[k], std::max(out[k], out[k + 2]));
    out[k + 1] = mid;
  }
  if (k + 1 < n) {
    // Trailing unpaired interval: reverse the first-interval rule on the last three nodes.
    const double h1 = x[k + 1] - x[k];
    const double h0 = x[k] - x[k - 1];
    double tail = detail::quadratic_first_interval(h1, h0, f[k + 1], f[k], f[k - 1]);
    if (nonnegative) tail = std::max(tail, 0.0);
    out[k + 1] = out[k] + tail;
  }
  return out;
}

/// Richardson-style error estimate: compares the cumulative Simpson integral
/// against the same rule on every other node and returns max |I_h - I_2h| / 15
/// relative to max |I_h| over the shared nodes.
inline double simpson_richardson_error(std::span<const double> x, std::span<const double> f) {
  if (x.size() < 5) return 0.0;
  const auto fine = cumulative_simpson(x, f);
  std::vector<double> xc, fc;
  for (std::size_t i = 0; i < x.size(); i += 2) {
    xc.push_back(x[i]);
    fc.push_back(f[i]);
  }
  const auto coarse = cumulative_simpson(xc, fc);
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < xc.size(); ++i) {
    scale = std::max(scale, std::abs(fine[2 * i]));
    diff = std::max(diff, std::abs(fine[2 * i] - coarse[i]));
  }
  return scale > 0.0 ? diff / 15.0 / scale : 0.0;
}

/// Cumulative integral from samples of f and its derivatives, one Hermite
/// interpolant per interval: quintic when d2f is given, cubic when d2f is
/// empty. Increments of a nonnegative integrand are clamped at zero.
inline std::vector<double> cumulative_hermite(std::span<const double> x, std::span<const double> f,
                                              std::span<const double> df, std::span<const double> d2f) {
  const std::size_t n = x.size();
  if (n < 2 || f.size() != n || df.size() != n || (!d2f.empty() && d2f.size() != n)) {
    throw ParameterError("cumulative_hermite: need equal-length samples of size >= 2");
  }
  const bool nonnegative = std::all_of(f.begin(), f.end(), [](double v) { return v >= 0.0; });
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = x[i + 1] - x[i];
    double inc = 0.0;
    if (d2f.empty()) {
      inc = h / 2.0 * (f[i] + f[i + 1]) + h * h / 12.0 * (df[i] - df[i + 1]);
    } else {
      inc = h / 2.0 * (f[i] + f[i + 1]) + h * h / 10.0 * (df[i] - df[i + 1]) +
            h * h * h / 120.0 * (d2f[i] + d2f[i + 1]);
    }
    if (nonnegative) inc = std::max(inc, 0.0);
    out[i + 1] = out[i] + inc;
  }
  return out;
}

/// max |I_h - I_2h| / (2^order - 1) relative to max |I_h|, where I_2h uses
/// every other node.
inline double hermite_richardson_error(std::span<const double> x, std::span<const double> f,
                                       std::span<const double> df, std::span<const double> d2f) {
  if (x.size() < 5) return 0.0;
  const auto fine = cumulative_hermite(x, f, df, d2f);
  std::vector<double> xc, fc, dfc, d2fc;
  for (std::size_t i = 0; i < x.size(); i += 2) {
    xc.push_back(x[i]);
    fc.push_back(f[i]);
    dfc.push_back(df[i]);
    if (!d2f.empty()) d2fc.push_back(d2f[i]);
  }
  const auto coarse = cumulative_hermite(xc, fc, dfc, d2fc);
  const double factor = d2f.empty() ? 15.0 : 63.0;
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < xc.size(); ++i) {
    scale = std::max(scale, std::abs(fine[2 * i]));
    diff = std::max(diff, std::abs(fine[2 * i] - coarse[i]));
  }
  return scale > 0.0 ? diff / factor / scale : 0.0;
}

}  // namespace parabolicity
