#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "svgph/signals.hpp"

using namespace svgph;

TEST(Sample, Zero) {
  for (double t : {0.0, 1.5, 1e4}) EXPECT_EQ(sample(SignalSpec::zero(), t), (SignalPair{0, 0}));
}

TEST(Sample, SinusoidAtZero) {
  const SignalPair d = sample(SignalSpec::sinusoid(2.0), 0.0);
  EXPECT_EQ(d.first, 1.0);
  EXPECT_EQ(d.second, 0.0);
}

TEST(Sample, SinusoidQuarterPeriod) {
  const SignalPair d = sample(SignalSpec::sinusoid(2.0), std::numbers::pi / 4);
  EXPECT_NEAR(d.first, 0.0, 1e-15);
  EXPECT_NEAR(d.second, 1.0, 1e-15);
}

TEST(Sample, SinusoidAmplitudeAndPhase) {
  const SignalPair d = sample(SignalSpec::sinusoid(3.0, 0.5, 0.2, -0.4), 1.1);
  EXPECT_NEAR(d.first, 0.5 * std::cos(3.3 + 0.2), 1e-15);
  EXPECT_NEAR(d.second, 0.5 * std::sin(3.3 - 0.4), 1e-15);
}

TEST(Sample, Constant) {
  EXPECT_EQ(sample(SignalSpec::constant(0.3, -2.0), 7.0), (SignalPair{0.3, -2.0}));
}

TEST(SupNorm, Examples) {
  EXPECT_EQ(sup_norm(SignalSpec::zero()), 0.0);
  EXPECT_DOUBLE_EQ(sup_norm(SignalSpec::sinusoid(2.0)), 1.0);
  EXPECT_DOUBLE_EQ(sup_norm(SignalSpec::bounded_noise(0.3, 9, 0.01)), 0.3);
  EXPECT_DOUBLE_EQ(sup_norm(SignalSpec::constant(3, 4)), 5.0);
}

TEST(SupNorm, BoundsSamples) {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> t(0.0, 1000.0);
  const SignalSpec specs[] = {
      SignalSpec::sinusoid(2.0),
      SignalSpec::sinusoid(1.3, 0.7, 0.4, 2.1),
      SignalSpec::sinusoid(0.0, 1.0, 0.5, 0.5),
      SignalSpec::bounded_noise(0.2, 42, 0.01),
      SignalSpec::constant(-1, 1),
  };
  for (const auto& s : specs) {
    const double sup = sup_norm(s);
    double seen = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const SignalPair v = sample(s, t(rng));
      const double n = std::hypot(v.first, v.second);
      EXPECT_LE(n, sup * (1 + 1e-15)) << to_string(s.kind);
      seen = std::max(seen, n);
    }
    // the supremum is tight, not just an upper bound
    EXPECT_GE(seen, 0.99 * sup) << to_string(s.kind);
  }
}

TEST(Noise, Deterministic) {
  const SignalSpec a = SignalSpec::bounded_noise(0.2, 1234, 0.01);
  for (double t : {0.0, 0.004, 0.5, 19.999}) EXPECT_EQ(sample(a, t), sample(a, t));
  const SignalSpec b = SignalSpec::bounded_noise(0.2, 1235, 0.01);
  EXPECT_NE(sample(a, 0.5), sample(b, 0.5));
}

TEST(Noise, HeldOverInterval) {
  const SignalSpec s = SignalSpec::bounded_noise(1.0, 7, 0.1);
  EXPECT_EQ(sample(s, 0.31), sample(s, 0.35));
  EXPECT_NE(sample(s, 0.35), sample(s, 0.45));
}

TEST(Noise, UniformMagnitudeAndDirection) {
  const SignalSpec s = SignalSpec::bounded_noise(2.0, 5, 1.0);
  double mean_r = 0.0, mean_c = 0.0, mean_s = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const SignalPair v = noise_at(s, static_cast<std::uint64_t>(k));
    const double r = std::hypot(v.first, v.second);
    mean_r += r / n;
    if (r > 0) {
      mean_c += v.first / r / n;
      mean_s += v.second / r / n;
    }
  }
  EXPECT_NEAR(mean_r, 1.0, 0.03);
  EXPECT_NEAR(mean_c, 0.0, 0.03);
  EXPECT_NEAR(mean_s, 0.0, 0.03);
}

TEST(Spec, NamesRoundTrip) {
  for (SignalKind k : {SignalKind::zero, SignalKind::sinusoid, SignalKind::constant,
                       SignalKind::bounded_noise}) {
    EXPECT_EQ(signal_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(signal_kind_from_string("square"), InvalidArgument);
}

TEST(Spec, Validation) {
  EXPECT_THROW(SignalSpec::bounded_noise(-1.0, 0, 0.1).validate(), InvalidArgument);
  EXPECT_THROW(SignalSpec::bounded_noise(1.0, 0, 0.0).validate(), InvalidArgument);
}

TEST(Noise, StepTimesLandOnTheirInterval) {
  const double h = 0.01;
  const SignalSpec s = SignalSpec::bounded_noise(1.0, 3, h);
  for (std::uint64_t k = 0; k < 5000; ++k) {
    const double t = static_cast<double>(k) * h;
    EXPECT_EQ(sample(s, t), noise_at(s, k)) << k;
    EXPECT_EQ(sample(s, t + 0.6 * h), noise_at(s, k)) << k;
  }
}
