#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "parabolicity/errors.hpp"

namespace parabolicity {

enum class GridKind { Uniform, Stretched };

/// Reporting grid on [0, r_max]. `Uniform` spaces `nodes` points evenly;
/// `Stretched` starts with spacing `first_spacing` and grows the spacing
/// geometrically so the tail is log-uniform, which keeps glue regions
/// resolved when r_max spans several decades.
struct GridSpec {
  GridKind kind = GridKind::Uniform;
  double r_max = 200.0;
  std::size_t nodes = 2048;
  double first_spacing = 0.01;  // Stretched only

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline std::vector<double> uniform_grid(double r_max, std::size_t nodes) {
  if (!(r_max > 0.0) || nodes < 2) {
    throw ParameterError("uniform_grid: need r_max > 0 and at least 2 nodes");
  }
  std::vector<double> grid(nodes);
  const double h = r_max / static_cast<double>(nodes - 1);
  for (std::size_t i = 0; i < nodes; ++i) grid[i] = h * static_cast<double>(i);
  grid.back() = r_max;
  return grid;
}

inline std::vector<double> stretched_grid(double r_max, std::size_t nodes,
                                          double first_spacing) {
  if (!(r_max > 0.0) || nodes < 3 || !(first_spacing > 0.0)) {
    throw ParameterError("stretched_grid: need r_max > 0, nodes >= 3, first_spacing > 0");
  }
  const double intervals = static_cast<double>(nodes - 1);
  if (first_spacing * intervals >= r_max) {
    throw ParameterError("stretched_grid: first_spacing too large for a stretched grid; use uniform");
  }
  // Solve first_spacing * (q^m - 1)/(q - 1) = r_max for the ratio q > 1.
  const auto span = [&](double q) {
    return first_spacing * std::expm1(intervals * std::log(q)) / (q - 1.0);
  };
  double lo = 1.0 + 1e-15;
  double hi = 2.0;
  while (span(hi) < r_max) hi = 1.0 + 2.0 * (hi - 1.0);
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (span(mid) < r_max ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  std::vector<double> grid(nodes);
  double spacing = first_spacing;
  grid[0] = 0.0;
  for (std::size_t i = 1; i < nodes; ++i) {
    grid[i] = grid[i - 1] + spacing;
    spacing *= q;
  }
  grid.back() = r_max;
  return grid;
}

inline std::vector<double> make_grid(const GridSpec& spec) {
  return spec.kind == GridKind::Uniform
             ? uniform_grid(spec.r_max, spec.nodes)
             : stretched_grid(spec.r_max, spec.nodes, spec.first_spacing);
}

inline std::string to_string(GridKind kind) {
  return kind == GridKind::Uniform ? "uniform" : "stretched";
}

}  // namespace parabolicity
