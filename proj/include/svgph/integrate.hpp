#pragma once

// One-step methods for the SVG model with zero-order-hold inputs, and the
// closed-loop simulation driver.
//
// Over one step u_k (evaluated at x_k) and d_k = d(t_k) are held constant,
// so the vector field is affine in x and every implicit stage reduces to a
// single linear solve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <string>

#include "svgph/control.hpp"
#include "svgph/error.hpp"
#include "svgph/phmodel.hpp"
#include "svgph/signals.hpp"
#include "svgph/smallmat.hpp"
#include "svgph/trajectory.hpp"

namespace svgph {

enum class StepperKind { midpoint_dirac, rk2_twostage, exact_reference };

inline const char* to_string(StepperKind k) {
  switch (k) {
    case StepperKind::midpoint_dirac: return "midpoint_dirac";
    case StepperKind::rk2_twostage: return "rk2_twostage";
    case StepperKind::exact_reference: return "exact_reference";
  }
  return "?";
}

inline StepperKind stepper_kind_from_string(const std::string& s) {
  if (s == "midpoint_dirac") return StepperKind::midpoint_dirac;
  if (s == "rk2_twostage") return StepperKind::rk2_twostage;
  if (s == "exact_reference") return StepperKind::exact_reference;
  throw InvalidArgument("unknown stepper '" + s + "'");
}

struct StepConfig {
  double h = 0.01;
  double stage_tol = 1e-13;
  std::size_t max_stage_iters = 100;
  /// false selects fixed-point iteration for the RK2 stages.
  bool direct_stages = true;

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("StepConfig: h must be > 0");
    if (!(stage_tol > 0.0)) throw InvalidArgument("StepConfig: stage_tol must be > 0");
  }

  bool operator==(const StepConfig&) const = default;
};

namespace detail {

inline Vec axpy(double a, const Vec& x, const Vec& y) {
  Vec out = y;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
  return out;
}

}  // namespace detail

// ---- Dirac-structure-preserving midpoint rule ----------------------------

/// x_{k+1} = (I - h/2 J0 + h/2 K0)^{-1} ((I + h/2 J0 - h/2 K0) x_k + h B d_k + h C0 u_k).
/// Throws SingularMatrix if the step matrix is singular.
template <std::size_t N>
State<N> midpoint_step(const State<N>& xk, const ControlInput& uk, const Disturbance& dk,
                       const StepConfig& cfg, const SystemParams& p) {
  const double h = cfg.h;
  const Mat drift_lin = mat_sub(flow_matrix<N>(p), coupling_matrix<N>(uk));
  const Mat id = identity(N);
  const Mat lhs = mat_sub(id, mat_scale(0.5 * h, drift_lin));
  const Mat fwd = mat_add(id, mat_scale(0.5 * h, drift_lin));

  Vec rhs = matvec(fwd, xk.to_vec());
  rhs = detail::axpy(h, matvec(disturbance_matrix<N>(p), Vec{dk.ig_d, dk.ig_q}), rhs);
  rhs = detail::axpy(h, matvec(control_matrix<N>(p), Vec{uk.u1, uk.u2}), rhs);
  return State<N>::from_vec(solve_linear(lhs, rhs));
}

// ---- two-stage implicit RK2 ------------------------------------------------

struct Rk2Stages {
  Vec k1;
  Vec k2;
  std::size_t iterations = 0;
};

/// Stages of k1 = f(x + h/4 k1), k2 = f(x + h (k2 - k1/4)) for an affine
/// field f(x) = A x + c of any dimension.
inline Rk2Stages rk2_affine_stages(const AffineField& f, const Vec& x, const StepConfig& cfg) {
  const std::size_t n = x.size();
  if (f.a.rows() != n || f.a.cols() != n || f.c.size() != n) {
    throw DimensionMismatch("rk2_affine_stages: field and state sizes differ");
  }
  const double h = cfg.h;

  if (cfg.direct_stages) {
    const Mat id = identity(n);
    Rk2Stages s;
    s.k1 = solve_linear(mat_sub(id, mat_scale(0.25 * h, f.a)), f(x));
    s.k2 = solve_linear(mat_sub(id, mat_scale(h, f.a)), f(detail::axpy(-0.25 * h, s.k1, x)));
    return s;
  }

  // Fixed-point fallback; converges when h*||A|| is small.
  auto iterate = [&](auto&& stage_arg, Vec k) {
    for (std::size_t it = 0; it < cfg.max_stage_iters; ++it) {
      Vec next = f(stage_arg(k));
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - k[i]));
      k = std::move(next);
      if (change <= cfg.stage_tol * (1.0 + norm_inf(k))) return std::pair{k, it + 1};
    }
    throw StageDivergence("rk2_step: fixed-point stage iteration did not converge");
  };
  Rk2Stages s;
  auto [k1, it1] = iterate([&](const Vec& k) { return detail::axpy(0.25 * h, k, x); }, f(x));
  s.k1 = std::move(k1);
  const Vec base = detail::axpy(-0.25 * h, s.k1, x);
  auto [k2, it2] = iterate([&](const Vec& k) { return detail::axpy(h, k, base); }, s.k1);
  s.k2 = std::move(k2);
  s.iterations = it1 + it2;
  return s;
}

template <std::size_t N>
Rk2Stages rk2_stages(const State<N>& xk, const ControlInput& uk, const Disturbance& dk,
                     const StepConfig& cfg, const SystemParams& p) {
  return rk2_affine_stages(affine_field<N>(uk, dk, p), xk.to_vec(), cfg);
}

/// x + h/2 (k1 + k2) for an affine field.
inline Vec rk2_affine_step(const AffineField& f, const Vec& x, const StepConfig& cfg) {
  const Rk2Stages s = rk2_affine_stages(f, x, cfg);
  return detail::axpy(0.5 * cfg.h, s.k2, detail::axpy(0.5 * cfg.h, s.k1, x));
}

template <std::size_t N>
State<N> rk2_step(const State<N>& xk, const ControlInput& uk, const Disturbance& dk,
                  const StepConfig& cfg, const SystemParams& p) {
  const Rk2Stages s = rk2_stages(xk, uk, dk, cfg, p);
  State<N> out = xk;
  for (std::size_t i = 0; i < N; ++i) out[i] += 0.5 * cfg.h * (s.k1[i] + s.k2[i]);
  return out;
}

// ---- exact reference ---------------------------------------------------------

/// Exact flow over [t_k, t_k + h] with u held. The state is augmented with a
/// unit slot (constant forcing) and a harmonic pair (cos w t, sin w t) so the
/// augmented system is autonomous and linear; the step is one matrix
/// exponential.
template <std::size_t N>
State<N> exact_step(const State<N>& xk, const ControlInput& uk, const SignalSpec& dist,
                    double t_k, double h, const SystemParams& p) {
  if (dist.kind == SignalKind::bounded_noise) {
    throw UnsupportedDisturbance("exact_step: bounded noise has no closed-form flow");
  }
  if (h == 0.0) return xk;

  constexpr std::size_t unit = N;
  constexpr std::size_t cos_slot = N + 1;
  constexpr std::size_t sin_slot = N + 2;
  Mat m(N + 3, N + 3);

  const Mat a = mat_sub(flow_matrix<N>(p), coupling_matrix<N>(uk));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) m(i, j) = a(i, j);

  m(0, unit) = uk.u1 / p.L;
  m(1, unit) = uk.u2 / p.L;

  const double inv_c = 1.0 / p.C;
  double w = 0.0;
  if (dist.kind == SignalKind::constant) {
    m(2, unit) = -inv_c * dist.value.first;
    m(3, unit) = -inv_c * dist.value.second;
  } else if (dist.kind == SignalKind::sinusoid) {
    // d = amp * [[cos pd, -sin pd], [sin pq, cos pq]] (cos w t, sin w t)
    w = dist.frequency;
    const double amp = dist.amplitude;
    m(2, cos_slot) = -inv_c * amp * std::cos(dist.phase_d);
    m(2, sin_slot) = inv_c * amp * std::sin(dist.phase_d);
    m(3, cos_slot) = -inv_c * amp * std::sin(dist.phase_q);
    m(3, sin_slot) = -inv_c * amp * std::cos(dist.phase_q);
    m(cos_slot, sin_slot) = -w;
    m(sin_slot, cos_slot) = w;
  }

  Vec z(N + 3);
  for (std::size_t i = 0; i < N; ++i) z[i] = xk[i];
  z[unit] = 1.0;
  z[cos_slot] = std::cos(w * t_k);
  z[sin_slot] = std::sin(w * t_k);

  const Vec zh = matvec(mat_exp(m, h), z);
  State<N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = zh[i];
  return out;
}

// ---- closed-loop simulation ----------------------------------------------------

enum class ControllerKind { none, iss, pi };

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::none: return "none";
    case ControllerKind::iss: return "iss";
    case ControllerKind::pi: return "pi";
  }
  return "?";
}

inline ControllerKind controller_kind_from_string(const std::string& s) {
  if (s == "none") return ControllerKind::none;
  if (s == "iss") return ControllerKind::iss;
  if (s == "pi") return ControllerKind::pi;
  throw InvalidArgument("unknown controller '" + s + "'");
}

struct ControllerSpec {
  ControllerKind kind = ControllerKind::iss;
  IssParams iss{};
  PiState pi = PiState::with_default_gains();

  static ControllerSpec none() { return {ControllerKind::none, {}, PiState::with_default_gains()}; }
  static ControllerSpec iss_with(IssParams c) {
    return {ControllerKind::iss, c, PiState::with_default_gains()};
  }
  static ControllerSpec pi_with(PiState s) { return {ControllerKind::pi, {}, std::move(s)}; }
};

/// Optional extras for a run.
struct SimulationOptions {
  /// Added to the controller output before it is held (bounded input error).
  SignalSpec input_error = SignalSpec::zero();
};

template <std::size_t N>
State<N> advance(StepperKind kind, const State<N>& x, const ControlInput& u, const SignalSpec& dist,
                 double t, const StepConfig& cfg, const SystemParams& p) {
  switch (kind) {
    case StepperKind::midpoint_dirac: {
      const SignalPair d = sample(dist, t);
      return midpoint_step(x, u, Disturbance{d.first, d.second}, cfg, p);
    }
    case StepperKind::rk2_twostage: {
      const SignalPair d = sample(dist, t);
      return rk2_step(x, u, Disturbance{d.first, d.second}, cfg, p);
    }
    case StepperKind::exact_reference:
      return exact_step(x, u, dist, t, cfg.h, p);
  }
  throw InvalidArgument("advance: unknown stepper");
}

/// Number of steps needed to cover [0, T] with step h.
inline std::size_t step_count(double T, double h) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidArgument("simulate: T must be > 0");
  if (!(h > 0.0)) throw InvalidArgument("simulate: h must be > 0");
  const double ratio = T / h;
  if (ratio > 1e8) throw InvalidArgument("simulate: T/h exceeds 1e8 steps");
  return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

/// Zero-order-hold closed loop on [0, T]. Records t = k h for k = 0..n,
/// where n = ceil(T/h); each record carries the input held over the
/// following step (the last one is the input that would be applied next).
template <std::size_t N>
Trajectory simulate(const State<N>& initial, const ControllerSpec& controller, StepperKind stepper,
                    const SignalSpec& disturbance, double T, const StepConfig& cfg,
                    const SystemParams& p, const SimulationOptions& opts = {}) {
  p.validate();
  cfg.validate();
  disturbance.validate();
  opts.input_error.validate();
  if (controller.kind == ControllerKind::iss) controller.iss.validate();
  const std::size_t n = step_count(T, cfg.h);

  Trajectory traj;
  traj.dim = N;
  traj.params = p;
  traj.controller = to_string(controller.kind);
  traj.stepper = to_string(stepper);
  traj.h = cfg.h;
  traj.T = T;
  traj.records.reserve(n + 1);

  PiState pi = controller.pi;
  State<N> x = initial;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * cfg.h;
    const State4 sub{{x[0], x[1], x[2], x[3]}};
    ControlInput u{};
    switch (controller.kind) {
      case ControllerKind::none:
        break;
      case ControllerKind::iss:
        u = iss_control(sub, p, controller.iss);
        break;
      case ControllerKind::pi: {
        auto [out, next] = pi_control(sub, pi, cfg.h);
        u = out;
        pi = std::move(next);
        break;
      }
    }
    const SignalPair v = sample(opts.input_error, t);
    u.u1 += v.first;
    u.u2 += v.second;
    const SignalPair d = sample(disturbance, t);

    StepRecord rec;
    rec.t = t;
    for (std::size_t i = 0; i < N; ++i) rec.x[i] = x[i];
    rec.u = u;
    rec.d = {d.first, d.second};
    rec.H = energy(x, p);
    rec.H0 = subsystem_energy(sub, p);
    traj.records.push_back(rec);

    if (k == n) break;
    try {
      x = advance(stepper, x, u, disturbance, t, cfg, p);
    } catch (const Error& e) {
      throw StepFailure(k, e.what());
    }
  }
  return traj;
}

}  // namespace svgph
