#pragma once

// Scalar summaries of closed-loop trajectories. State-based metrics look at
// the controlled states x1..x4 only; x5 is a stored energy, not a regulated
// quantity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "svgph/control.hpp"
#include "svgph/error.hpp"
#include "svgph/trajectory.hpp"

namespace svgph {

struct MetricsReport {
  std::optional<double> settling_time;
  double offset_amplitude = 0.0;
  double control_effort = 0.0;
  double energy_drift_max = 0.0;
  std::optional<double> iss_margin_min;
  std::optional<double> observed_order;
};

namespace detail {

inline double controlled_peak(const StepRecord& r) {
  return std::max({std::abs(r.x[0]), std::abs(r.x[1]), std::abs(r.x[2]), std::abs(r.x[3])});
}

inline double controlled_norm(const StepRecord& r) {
  return std::sqrt(r.x[0] * r.x[0] + r.x[1] * r.x[1] + r.x[2] * r.x[2] + r.x[3] * r.x[3]);
}

inline std::size_t tail_start(const Trajectory& traj, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw InvalidArgument("tail_fraction must lie in (0, 1]");
  }
  if (traj.empty()) throw InvalidArgument("empty trajectory");
  const auto n = traj.size();
  const auto count = static_cast<std::size_t>(
      std::max(1.0, std::ceil(tail_fraction * static_cast<double>(n) - 1e-9)));
  return n - std::min(count, n);
}

}  // namespace detail

/// Earliest sample time after which every controlled state stays within
/// `band`; nullopt if the final sample is still outside.
inline std::optional<double> settling_time(const Trajectory& traj, double band) {
  if (!(band > 0.0)) throw InvalidArgument("settling_time: band must be > 0");
  if (traj.empty()) return std::nullopt;
  const auto& recs = traj.records;
  for (std::size_t k = recs.size(); k-- > 0;) {
    if (detail::controlled_peak(recs[k]) > band) {
      if (k + 1 == recs.size()) return std::nullopt;
      return recs[k + 1].t;
    }
  }
  return recs.front().t;
}

/// fraction * max_i |x_i(0)| over the controlled states (2% by default).
inline double default_settling_band(const Trajectory& traj, double fraction = 0.02) {
  if (traj.empty()) throw InvalidArgument("default_settling_band: empty trajectory");
  return fraction * detail::controlled_peak(traj.records.front());
}

/// Settling into the steady oscillation: band is added to the peak of
/// max_i |x_i| over the trailing tail_fraction of the run.
inline std::optional<double> settling_time_to_envelope(const Trajectory& traj,
                                                       double tail_fraction, double band) {
  const std::size_t start = detail::tail_start(traj, tail_fraction);
  double envelope = 0.0;
  for (std::size_t k = start; k < traj.size(); ++k) {
    envelope = std::max(envelope, detail::controlled_peak(traj.records[k]));
  }
  return settling_time(traj, envelope + band);
}

/// Left Riemann sum of h ||u_k||^2 over the steps of the run.
inline double control_effort(const Trajectory& traj) {
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const auto& u = traj.records[k].u;
    sum += traj.h * (u.u1 * u.u1 + u.u2 * u.u2);
  }
  return sum;
}

/// |H(x_k) - H(x_0)| for every record.
inline std::vector<double> energy_deviation(const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.size());
  if (traj.empty()) return out;
  const double h0 = traj.records.front().H;
  for (const auto& r : traj.records) out.push_back(std::abs(r.H - h0));
  return out;
}

inline double energy_drift(const Trajectory& traj) {
  const auto dev = energy_deviation(traj);
  return dev.empty() ? 0.0 : *std::max_element(dev.begin(), dev.end());
}

/// Peak of ||(x1..x4)|| over the trailing tail_fraction of the records.
inline double steady_offset(const Trajectory& traj, double tail_fraction) {
  const std::size_t start = detail::tail_start(traj, tail_fraction);
  double peak = 0.0;
  for (std::size_t k = start; k < traj.size(); ++k) {
    peak = std::max(peak, detail::controlled_norm(traj.records[k]));
  }
  return peak;
}

/// Half the peak-to-peak swing of ||(x1..x4)|| over the tail.
inline double oscillation_amplitude(const Trajectory& traj, double tail_fraction) {
  const std::size_t start = detail::tail_start(traj, tail_fraction);
  double lo = detail::controlled_norm(traj.records[start]);
  double hi = lo;
  for (std::size_t k = start; k < traj.size(); ++k) {
    const double v = detail::controlled_norm(traj.records[k]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return 0.5 * (hi - lo);
}

/// Least-squares slope of log(error) against log(h).
inline double observed_order(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2) throw InvalidArgument("observed_order: need at least two samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].first < samples[i - 1].first)) {
      throw InvalidArgument("observed_order: h must be strictly decreasing");
    }
  }
  double sx = 0.0, sy = 0.0;
  for (const auto& [h, err] : samples) {
    if (!(err > 0.0) || !(h > 0.0)) throw DegenerateFit("observed_order: non-positive error or h");
    sx += std::log(h);
    sy += std::log(err);
  }
  const double n = static_cast<double>(samples.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [h, err] : samples) {
    const double dx = std::log(h) - mx;
    sxy += dx * (std::log(err) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// min_k of -iss_inequality_residual(x_k, u_k); >= 0 means the ISS
/// condition held at every sample.
inline double iss_margin(const Trajectory& traj, const SystemParams& p, const IssParams& c) {
  if (traj.empty()) throw InvalidArgument("iss_margin: empty trajectory");
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : traj.records) {
    const State4 x{{r.x[0], r.x[1], r.x[2], r.x[3]}};
    worst = std::min(worst, -iss_inequality_residual(x, r.u, p, c));
  }
  return worst;
}

struct MetricsSettings {
  double settling_fraction = 0.02;
  double tail_fraction = 0.25;
  /// Measure settling against the steady envelope instead of zero.
  bool settle_to_envelope = false;
};

inline MetricsReport compute_report(const Trajectory& traj, const IssParams& iss,
                                    const MetricsSettings& s = {}) {
  MetricsReport m;
  const double band = default_settling_band(traj, s.settling_fraction);
  if (band > 0.0) {
    m.settling_time = s.settle_to_envelope ? settling_time_to_envelope(traj, s.tail_fraction, band)
                                           : settling_time(traj, band);
  } else {
    m.settling_time = traj.records.front().t;
  }
  m.offset_amplitude = steady_offset(traj, s.tail_fraction);
  m.control_effort = control_effort(traj);
  m.energy_drift_max = energy_drift(traj);
  m.iss_margin_min = iss_margin(traj, traj.params, iss);
  return m;
}

}  // namespace svgph
