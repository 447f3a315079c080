#pragma once

// Feedback laws for the 4-state subsystem: the ISS energy-shaping controller
// and the PI baseline, plus the pointwise ISS certificate and the
// input-error robustness bound.

#include <algorithm>
#include <cmath>
#include <utility>

#include "svgph/error.hpp"
#include "svgph/phmodel.hpp"
#include "svgph/smallmat.hpp"

namespace svgph {

/// alpha: decay rate. epsilon = beta/alpha: ultimate-bound ratio.
/// ratio_cap: saturation of (x3^2 + x4^2)/(x1^2 + x2^2).
struct IssParams {
  double alpha = 2.0;
  double epsilon = 0.125;
  double ratio_cap = 5.0;

  double beta() const { return alpha * epsilon; }

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("IssParams: alpha must be > 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw InvalidArgument("IssParams: epsilon must be > 0");
    }
    if (!(ratio_cap > 0.0) || !std::isfinite(ratio_cap)) {
      throw InvalidArgument("IssParams: ratio_cap must be > 0");
    }
  }

  bool operator==(const IssParams&) const = default;
};

/// Feedback gain k(r) in u = -k(r) (x1, x2) for voltage/current ratio r.
inline double iss_gain(double ratio, const SystemParams& p, const IssParams& c) {
  return ratio / (4.0 * c.alpha * c.epsilon) + 0.5 * c.alpha * p.L + 0.5 * c.alpha * p.C * ratio;
}

/// Minimum-norm feedback that meets the ISS inequality with equality. The
/// voltage/current ratio is replaced by min(ratio, ratio_cap); at zero
/// current the capped gain is used and the output is exactly zero.
inline ControlInput iss_control(const State4& x, const SystemParams& p, const IssParams& c) {
  const double current_sq = x[0] * x[0] + x[1] * x[1];
  const double voltage_sq = x[2] * x[2] + x[3] * x[3];
  double ratio = c.ratio_cap;
  if (current_sq > 0.0) {
    const double r = voltage_sq / current_sq;
    if (r <= c.ratio_cap) ratio = r;
  }
  const double k = iss_gain(ratio, p, c);
  return {-x[0] * k, -x[1] * k};
}

/// Left side of the ISS condition specialised to the subsystem:
///   (x1 u1 + x2 u2) + (x3^2 + x4^2)/(4 alpha eps) + alpha H0(x).
/// The condition is certified where this is <= 0.
inline double iss_inequality_residual(const State4& x, const ControlInput& u,
                                      const SystemParams& p, const IssParams& c) {
  const double voltage_sq = x[2] * x[2] + x[3] * x[3];
  return (x[0] * u.u1 + x[1] * u.u2) + voltage_sq / (4.0 * c.alpha * c.epsilon) +
         c.alpha * subsystem_energy(x, p);
}

// ---- input-error robustness ------------------------------------------------

struct RobustnessBound {
  double rho = 0.0;
  double disturbance_gain = 0.0;
  double error_gain = 0.0;
  bool valid = false;

  /// H0(0) e^{-rho T} + gain_d * sup|d|^2 + gain_v * sup|v|^2.
  double at(double h0_initial, double t, double d_sup, double v_sup) const {
    return h0_initial * std::exp(-rho * t) + disturbance_gain * d_sup * d_sup +
           error_gain * v_sup * v_sup;
  }
};

/// rho = alpha - 1/L. The bound is void (gains left at zero) when rho <= 0.
inline RobustnessBound robustness_bound(const SystemParams& p, const IssParams& c) {
  RobustnessBound b;
  b.rho = c.alpha - 1.0 / p.L;
  b.valid = b.rho > 0.0;
  if (b.valid) {
    b.disturbance_gain = c.beta() / b.rho;
    b.error_gain = 1.0 / (2.0 * b.rho);
  }
  return b;
}

// ---- PI baseline -------------------------------------------------------------

/// Gains from an LQR design with Q = diag(0, 0, 10, 10, 1, 1), R = I2.
inline std::pair<Mat, Mat> default_pi_gains() {
  Mat kp{{2.1956, -0.8878}, {0.8878, 2.1956}};
  Mat ki{{0.8364, 0.5481}, {-0.5481, 0.8364}};
  return {std::move(kp), std::move(ki)};
}

struct PiState {
  Mat kp;
  Mat ki;
  Vec integral = Vec(2);
  Vec last_sample = Vec(2);
  bool initialized = false;

  static PiState with_gains(Mat kp, Mat ki) {
    if (kp.rows() != 2 || kp.cols() != 2 || ki.rows() != 2 || ki.cols() != 2) {
      throw DimensionMismatch("PiState: gains must be 2x2");
    }
    PiState s;
    s.kp = std::move(kp);
    s.ki = std::move(ki);
    return s;
  }
  static PiState with_default_gains() {
    auto [kp, ki] = default_pi_gains();
    return with_gains(std::move(kp), std::move(ki));
  }

  bool operator==(const PiState&) const = default;
};

/// u = -Kp (x1, x2) - Ki * integral, with the integral advanced by the
/// trapezoid rule over the current sample interval h. Returns the input and
/// the advanced state; `s` is not modified.
inline std::pair<ControlInput, PiState> pi_control(const State4& x, const PiState& s, double h) {
  if (!(h > 0.0)) throw InvalidArgument("pi_control: h must be > 0");
  PiState next = s;
  if (next.initialized) {
    next.integral[0] += 0.5 * h * (next.last_sample[0] + x[0]);
    next.integral[1] += 0.5 * h * (next.last_sample[1] + x[1]);
  }
  next.last_sample[0] = x[0];
  next.last_sample[1] = x[1];
  next.initialized = true;

  const Mat& kp = next.kp;
  const Mat& ki = next.ki;
  const Vec& i = next.integral;
  ControlInput u{-(kp(0, 0) * x[0] + kp(0, 1) * x[1]) - (ki(0, 0) * i[0] + ki(0, 1) * i[1]),
                 -(kp(1, 0) * x[0] + kp(1, 1) * x[1]) - (ki(1, 0) * i[0] + ki(1, 1) * i[1])};
  return {u, std::move(next)};
}

}  // namespace svgph
