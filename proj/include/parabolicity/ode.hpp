#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>

#include "parabolicity/errors.hpp"

namespace parabolicity {

/// Dormand-Prince 5(4) embedded pair with the 4th-order continuous extension
/// from Hairer, Norsett & Wanner. Fixed-size state, one step at a time, so
/// callers can inspect each accepted step (root finding, resampling).
template <std::size_t N>
class Dopri5 {
 public:
  using State = std::array<double, N>;

  struct Options {
    double rtol = 1e-10;
    double atol = 1e-10;
    double initial_step = 1e-4;
    double max_step = 1e300;
  };

  template <class Rhs>
  Dopri5(Rhs rhs, double t0, const State& y0, Options opts)
      : t_(t0), y_(y0), opts_(opts), h_(opts.initial_step) {
    rhs_ = [rhs](double t, const State& y) { return rhs(t, y); };
    k1_ = rhs_(t_, y_);
  }

  double time() const noexcept { return t_; }
  double previous_time() const noexcept { return t_old_; }
  const State& state() const noexcept { return y_; }
  std::size_t accepted() const noexcept { return accepted_; }
  std::size_t rejected() const noexcept { return rejected_; }

  /// Advances by one accepted step, never past t_end.
  void step(double t_end) {
    constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0;
    for (;;) {
      double h = std::min({h_, opts_.max_step, t_end - t_});
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));
      if (h < floor && t_end - t_ > floor) {
        throw StepFailure("step size underflow at r = " + std::to_string(t_) +
                          " (profile singular inside the domain?)");
      }
      State y_new, k7, err;
      State tmp;
      const auto combo = [&](std::initializer_list<std::pair<double, const State*>> terms) {
        for (std::size_t i = 0; i < N; ++i) {
          double inc = 0.0;
          for (const auto& [c, k] : terms) inc += c * (*k)[i];
          tmp[i] = y_[i] + h * inc;
        }
        return tmp;
      };
      const State k2 = rhs_(t_ + h / 5.0, combo({{1.0 / 5.0, &k1_}}));
      const State k3 = rhs_(t_ + 3.0 * h / 10.0, combo({{3.0 / 40.0, &k1_}, {9.0 / 40.0, &k2}}));
      const State k4 = rhs_(t_ + 4.0 * h / 5.0,
                            combo({{44.0 / 45.0, &k1_}, {-56.0 / 15.0, &k2}, {32.0 / 9.0, &k3}}));
      const State k5 = rhs_(t_ + 8.0 * h / 9.0,
                            combo({{19372.0 / 6561.0, &k1_},
                                   {-25360.0 / 2187.0, &k2},
                                   {64448.0 / 6561.0, &k3},
                                   {-212.0 / 729.0, &k4}}));
      const State k6 = rhs_(t_ + h, combo({{9017.0 / 3168.0, &k1_},
                                           {-355.0 / 33.0, &k2},
                                           {46732.0 / 5247.0, &k3},
                                           {49.0 / 176.0, &k4},
                                           {-5103.0 / 18656.0, &k5}}));
      y_new = combo({{35.0 / 384.0, &k1_},
                     {500.0 / 1113.0, &k3},
                     {125.0 / 192.0, &k4},
                     {-2187.0 / 6784.0, &k5},
                     {11.0 / 84.0, &k6}});
      k7 = rhs_(t_ + h, y_new);

      double err_norm = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < N; ++i) {
        err[i] = h * (71.0 / 57600.0 * k1_[i] - 71.0 / 16695.0 * k3[i] + 71.0 / 1920.0 * k4[i] -
                      17253.0 / 339200.0 * k5[i] + 22.0 / 525.0 * k6[i] - 1.0 / 40.0 * k7[i]);
        const double sc = opts_.atol + opts_.rtol * std::max(std::abs(y_[i]), std::abs(y_new[i]));
        err_norm += (err[i] / sc) * (err[i] / sc);
        finite = finite && std::isfinite(y_new[i]);
      }
      err_norm = std::sqrt(err_norm / static_cast<double>(N));

      if (!finite || !std::isfinite(err_norm)) {
        ++rejected_;
        h_ = h * fac_min;
        continue;
      }
      if (err_norm <= 1.0) {
        // Dense output coefficients.
        constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                         d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                         d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
        for (std::size_t i = 0; i < N; ++i) {
          const double ydiff = y_new[i] - y_[i];
          const double bspl = h * k1_[i] - ydiff;
          rc1_[i] = y_[i];
          rc2_[i] = ydiff;
          rc3_[i] = bspl;
          rc4_[i] = ydiff - h * k7[i] - bspl;
          rc5_[i] = h * (d1 * k1_[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        t_old_ = t_;
        h_old_ = h;
        t_ = (h == t_end - t_) ? t_end : t_ + h;
        y_ = y_new;
        k1_ = k7;
        ++accepted_;
        const double fac = err_norm == 0.0 ? fac_max : safety * std::pow(err_norm, -0.2);
        h_ = h * std::clamp(fac, fac_min, fac_max);
        return;
      }
      ++rejected_;
      h_ = h * std::max(fac_min, safety * std::pow(err_norm, -0.2));
    }
  }

  /// Continuous extension on the last accepted step [previous_time, time].
  State dense(double t) const {
    const double theta = (t - t_old_) / h_old_;
    const double theta1 = 1.0 - theta;
    State out;
    for (std::size_t i = 0; i < N; ++i) {
      out[i] = rc1_[i] + theta * (rc2_[i] + theta1 * (rc3_[i] + theta * (rc4_[i] + theta1 * rc5_[i])));
    }
    return out;
  }

 private:
  std::function<State(double, const State&)> rhs_;
  double t_;
  double t_old_ = 0.0;
  double h_old_ = 1.0;
  State y_;
  State k1_{};
  State rc1_{}, rc2_{}, rc3_{}, rc4_{}, rc5_{};
  Options opts_;
  double h_;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
};

}  // namespace parabolicity
