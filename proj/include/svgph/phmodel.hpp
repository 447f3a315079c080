#pragma once

// Port-Hamiltonian model of the grid-forming SVG in the dq frame.
//
// States: x1, x2 filtered inductor current; x3, x4 output voltage; x5 DC
// capacitor energy. The full model has five states, the controlled
// subsystem the first four. Resistance is zero throughout.
//
// Disturbance sign: the grid current enters the voltage rows as
// -(1/C)(ig_d, ig_q). Every B-product in this library uses that signed
// column, so dH/dt = -x3*ig_d - x4*ig_q holds exactly.

#include <array>
#include <cmath>
#include <cstddef>

#include "svgph/error.hpp"
#include "svgph/smallmat.hpp"

namespace svgph {

struct SystemParams {
  double L = 1.0;
  double C = 1.0;
  double omega = 1.0;

  void validate() const {
    if (!std::isfinite(L) || !std::isfinite(C) || !std::isfinite(omega)) {
      throw InvalidArgument("SystemParams: non-finite parameter");
    }
    if (L <= 0.0) throw InvalidArgument("SystemParams: L must be > 0");
    if (C <= 0.0) throw InvalidArgument("SystemParams: C must be > 0");
  }

  bool operator==(const SystemParams&) const = default;
};

template <std::size_t N>
struct State {
  static_assert(N == 4 || N == 5, "the SVG model has 4 or 5 states");
  static constexpr std::size_t size = N;

  std::array<double, N> x{};

  double& operator[](std::size_t i) { return x[i]; }
  double operator[](std::size_t i) const { return x[i]; }

  Vec to_vec() const { return Vec(std::vector<double>(x.begin(), x.end())); }
  static State from_vec(const Vec& v) {
    if (v.size() != N) throw DimensionMismatch("State: wrong vector length");
    State s;
    for (std::size_t i = 0; i < N; ++i) s.x[i] = v[i];
    return s;
  }

  bool operator==(const State&) const = default;
};

using State5 = State<5>;
using State4 = State<4>;

struct ControlInput {
  double u1 = 0.0;
  double u2 = 0.0;
  bool operator==(const ControlInput&) const = default;
};

struct Disturbance {
  double ig_d = 0.0;
  double ig_q = 0.0;
  bool operator==(const Disturbance&) const = default;
};

inline State4 subsystem_of(const State5& s) { return State4{{s[0], s[1], s[2], s[3]}}; }

inline double hamiltonian(const State5& s, const SystemParams& p) {
  return 0.5 * p.L * (s[0] * s[0] + s[1] * s[1]) + 0.5 * p.C * (s[2] * s[2] + s[3] * s[3]) +
         s[4];
}

/// H0: inductor plus capacitor energy.
inline double subsystem_energy(const State4& s, const SystemParams& p) {
  return 0.5 * p.L * (s[0] * s[0] + s[1] * s[1]) + 0.5 * p.C * (s[2] * s[2] + s[3] * s[3]);
}

/// H for the 5-state model, H0 for the subsystem.
template <std::size_t N>
double energy(const State<N>& s, const SystemParams& p) {
  if constexpr (N == 5) {
    return hamiltonian(s, p);
  } else {
    return subsystem_energy(s, p);
  }
}

inline Vec grad_hamiltonian(const State5& s, const SystemParams& p) {
  return Vec{p.L * s[0], p.L * s[1], p.C * s[2], p.C * s[3], 1.0};
}

template <std::size_t N>
Vec grad_energy(const State<N>& s, const SystemParams& p) {
  if constexpr (N == 5) {
    return grad_hamiltonian(s, p);
  } else {
    return Vec{p.L * s[0], p.L * s[1], p.C * s[2], p.C * s[3]};
  }
}

// ---- structure matrices -------------------------------------------------

/// Skew interconnection J acting on grad H (J_sub for N = 4).
template <std::size_t N>
Mat interconnection_matrix(const SystemParams& p) {
  Mat j(N, N);
  const double cl = 1.0 / (p.C * p.L);
  j(0, 1) = p.omega / p.L;
  j(1, 0) = -p.omega / p.L;
  j(0, 2) = -cl;
  j(2, 0) = cl;
  j(1, 3) = -cl;
  j(3, 1) = cl;
  j(2, 3) = p.omega / p.C;
  j(3, 2) = -p.omega / p.C;
  return j;
}

/// Zero dissipation slot R.
template <std::size_t N>
Mat dissipation_matrix(const SystemParams&) {
  return Mat(N, N);
}

/// State matrix J0 = J * diag(L, L, C, C[, .]) acting directly on x.
template <std::size_t N>
Mat flow_matrix(const SystemParams& p) {
  Mat m(N, N);
  m(0, 1) = p.omega;
  m(0, 2) = -1.0 / p.L;
  m(1, 0) = -p.omega;
  m(1, 3) = -1.0 / p.L;
  m(2, 0) = 1.0 / p.C;
  m(2, 3) = p.omega;
  m(3, 1) = 1.0 / p.C;
  m(3, 2) = -p.omega;
  return m;
}

/// Signed disturbance matrix B: -(1/C) on the voltage rows.
template <std::size_t N>
Mat disturbance_matrix(const SystemParams& p) {
  Mat b(N, 2);
  b(2, 0) = -1.0 / p.C;
  b(3, 1) = -1.0 / p.C;
  return b;
}

/// State-independent part C0 of the input matrix.
template <std::size_t N>
Mat control_matrix(const SystemParams& p) {
  Mat c(N, 2);
  c(0, 0) = 1.0 / p.L;
  c(1, 1) = 1.0 / p.L;
  return c;
}

/// Full input matrix C(x); row 5 is (-x1, -x2) on the 5-state model.
template <std::size_t N>
Mat input_matrix(const State<N>& s, const SystemParams& p) {
  Mat c = control_matrix<N>(p);
  if constexpr (N == 5) {
    c(4, 0) = -s[0];
    c(4, 1) = -s[1];
  }
  return c;
}

/// K0(u): C(x)u = C0 u - K0(u) x. Zero on the subsystem.
template <std::size_t N>
Mat coupling_matrix(const ControlInput& u) {
  Mat k(N, N);
  if constexpr (N == 5) {
    k(4, 0) = u.u1;
    k(4, 1) = u.u2;
  }
  return k;
}

/// With u and d frozen the vector field is affine: f(x) = A x + c.
struct AffineField {
  Mat a;
  Vec c;

  Vec operator()(const Vec& x) const {
    Vec out = matvec(a, x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
    return out;
  }
};

template <std::size_t N>
AffineField affine_field(const ControlInput& u, const Disturbance& d, const SystemParams& p) {
  AffineField f{mat_sub(flow_matrix<N>(p), coupling_matrix<N>(u)), Vec(N)};
  const double inv_l = 1.0 / p.L;
  const double inv_c = 1.0 / p.C;
  f.c[0] = inv_l * u.u1;
  f.c[1] = inv_l * u.u2;
  f.c[2] = -inv_c * d.ig_d;
  f.c[3] = -inv_c * d.ig_q;
  return f;
}

// ---- vector fields --------------------------------------------------------

inline Vec drift5(const State5& s, const ControlInput& u, const Disturbance& d,
                  const SystemParams& p) {
  const double inv_l = 1.0 / p.L;
  const double inv_c = 1.0 / p.C;
  return Vec{
      p.omega * s[1] - inv_l * s[2] + inv_l * u.u1,
      -p.omega * s[0] - inv_l * s[3] + inv_l * u.u2,
      inv_c * s[0] + p.omega * s[3] - inv_c * d.ig_d,
      inv_c * s[1] - p.omega * s[2] - inv_c * d.ig_q,
      -s[0] * u.u1 - s[1] * u.u2,
  };
}

inline Vec drift4(const State4& s, const ControlInput& u, const Disturbance& d,
                  const SystemParams& p) {
  const double inv_l = 1.0 / p.L;
  const double inv_c = 1.0 / p.C;
  return Vec{
      p.omega * s[1] - inv_l * s[2] + inv_l * u.u1,
      -p.omega * s[0] - inv_l * s[3] + inv_l * u.u2,
      inv_c * s[0] + p.omega * s[3] - inv_c * d.ig_d,
      inv_c * s[1] - p.omega * s[2] - inv_c * d.ig_q,
  };
}

template <std::size_t N>
Vec drift(const State<N>& s, const ControlInput& u, const Disturbance& d,
          const SystemParams& p) {
  if constexpr (N == 5) {
    return drift5(s, u, d, p);
  } else {
    return drift4(s, u, d, p);
  }
}

/// Exact dH/dt along the 5-state model; independent of u.
inline double energy_rate(const State5& s, const Disturbance& d) {
  return -s[2] * d.ig_d - s[3] * d.ig_q;
}

/// [H(x_{k+1}) - H(x_k)] - h * gradH(midpoint)^T B d_k. Zero for a
/// Dirac-structure-preserving step.
template <std::size_t N>
double discrete_balance_residual(const State<N>& xk, const State<N>& xk1, const Disturbance& dk,
                                 double h, const SystemParams& p) {
  const double mid3 = 0.5 * (xk[2] + xk1[2]);
  const double mid4 = 0.5 * (xk[3] + xk1[3]);
  const double port_power = -mid3 * dk.ig_d - mid4 * dk.ig_q;
  return (energy(xk1, p) - energy(xk, p)) - h * port_power;
}

}  // namespace svgph
