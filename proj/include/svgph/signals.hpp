#pragma once

// Two-component signal generators: grid-current disturbances d(t) and
// injected control errors v(t).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>

#include "svgph/error.hpp"

namespace svgph {

enum class SignalKind { zero, sinusoid, constant, bounded_noise };

inline const char* to_string(SignalKind k) {
  switch (k) {
    case SignalKind::zero: return "zero";
    case SignalKind::sinusoid: return "sinusoid";
    case SignalKind::constant: return "constant";
    case SignalKind::bounded_noise: return "bounded_noise";
  }
  return "?";
}

inline SignalKind signal_kind_from_string(const std::string& s) {
  if (s == "zero") return SignalKind::zero;
  if (s == "sinusoid") return SignalKind::sinusoid;
  if (s == "constant") return SignalKind::constant;
  if (s == "bounded_noise") return SignalKind::bounded_noise;
  throw InvalidArgument("unknown signal kind '" + s + "'");
}

struct SignalPair {
  double first = 0.0;
  double second = 0.0;
  bool operator==(const SignalPair&) const = default;
};

/// sinusoid:      amplitude * (cos(freq t + phase_d), sin(freq t + phase_q))
/// constant:      value
/// bounded_noise: piecewise constant on [k*hold, (k+1)*hold), uniform
///                direction and uniform magnitude in [0, amplitude]
struct SignalSpec {
  SignalKind kind = SignalKind::zero;
  double amplitude = 1.0;
  double frequency = 2.0;
  double phase_d = 0.0;
  double phase_q = 0.0;
  SignalPair value{};
  std::uint64_t seed = 0;
  double hold = 0.01;

  static SignalSpec zero() { return {}; }
  static SignalSpec sinusoid(double frequency, double amplitude = 1.0, double phase_d = 0.0,
                             double phase_q = 0.0) {
    SignalSpec s;
    s.kind = SignalKind::sinusoid;
    s.frequency = frequency;
    s.amplitude = amplitude;
    s.phase_d = phase_d;
    s.phase_q = phase_q;
    return s;
  }
  static SignalSpec constant(double a, double b) {
    SignalSpec s;
    s.kind = SignalKind::constant;
    s.value = {a, b};
    return s;
  }
  static SignalSpec bounded_noise(double amplitude, std::uint64_t seed, double hold) {
    SignalSpec s;
    s.kind = SignalKind::bounded_noise;
    s.amplitude = amplitude;
    s.seed = seed;
    s.hold = hold;
    return s;
  }

  void validate() const {
    if (!std::isfinite(frequency) || !std::isfinite(phase_d) || !std::isfinite(phase_q) ||
        !std::isfinite(value.first) || !std::isfinite(value.second)) {
      throw InvalidArgument("SignalSpec: non-finite parameter");
    }
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
      throw InvalidArgument("SignalSpec: amplitude must be finite and >= 0");
    }
    if (kind == SignalKind::bounded_noise && !(hold > 0.0)) {
      throw InvalidArgument("SignalSpec: noise hold interval must be > 0");
    }
  }

  bool operator==(const SignalSpec&) const = default;
};

namespace detail {

// splitmix64 finalizer; counter-based so samples depend only on (seed, k).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Noise value for hold interval k.
inline SignalPair noise_at(const SignalSpec& spec, std::uint64_t k) {
  const std::uint64_t a = detail::mix64(spec.seed ^ detail::mix64(2 * k));
  const std::uint64_t b = detail::mix64(spec.seed ^ detail::mix64(2 * k + 1));
  const double angle = 2.0 * std::numbers::pi * detail::unit_interval(a);
  // unit_interval < 1, so the magnitude never exceeds the amplitude.
  const double radius = spec.amplitude * detail::unit_interval(b);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

inline SignalPair sample(const SignalSpec& spec, double t) {
  switch (spec.kind) {
    case SignalKind::zero:
      return {};
    case SignalKind::sinusoid:
      return {spec.amplitude * std::cos(spec.frequency * t + spec.phase_d),
              spec.amplitude * std::sin(spec.frequency * t + spec.phase_q)};
    case SignalKind::constant:
      return spec.value;
    case SignalKind::bounded_noise: {
      // the small offset keeps t = k*hold computed in floating point on interval k
      const double k = std::floor(t / spec.hold + 1e-9);
      return noise_at(spec, k <= 0.0 ? 0 : static_cast<std::uint64_t>(k));
    }
  }
  return {};
}

/// Exact supremum of ||signal(t)|| over t >= 0.
inline double sup_norm(const SignalSpec& spec) {
  switch (spec.kind) {
    case SignalKind::zero:
      return 0.0;
    case SignalKind::constant:
      return std::hypot(spec.value.first, spec.value.second);
    case SignalKind::bounded_noise:
      return spec.amplitude;
    case SignalKind::sinusoid: {
      if (spec.frequency == 0.0) {
        return spec.amplitude * std::hypot(std::cos(spec.phase_d), std::sin(spec.phase_q));
      }
      // cos^2(a) + sin^2(b) peaks at 1 + |sin(a - b)| as t sweeps a period.
      return spec.amplitude * std::sqrt(1.0 + std::abs(std::sin(spec.phase_d - spec.phase_q)));
    }
  }
  return 0.0;
}

}  // namespace svgph
