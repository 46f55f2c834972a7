#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <unsupported/Eigen/FFT>

#include "srclock/propagation.hpp"
#include "srclock/pulses.hpp"

namespace srclock {
namespace {

const PhysicalConstants kConst;

Waveform random_waveform(std::size_t n, double duration, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.2, 1.0), ph(-1.0, 1.0);
  Waveform w;
  w.segmentDuration = duration / static_cast<double>(n);
  w.label = "optimized";
  for (std::size_t k = 0; k < n; ++k) w.segments.push_back({amp(rng), ph(rng)});
  return w;
}

std::vector<double> rabi_of(const SampledWaveform& sw) {
  std::vector<double> r;
  for (const auto& s : sw.samples) r.push_back(s.rabi);
  return r;
}

TEST(PrimitivePi, DurationAndLabel) {
  const auto w = primitive_pi(kTwoPi * 3e3);
  EXPECT_NEAR(w.duration(), 166.6666666e-6, 1e-12);
  EXPECT_EQ(w.size(), 1u);
  EXPECT_EQ(w.segments[0].phase, 0.0);
  EXPECT_DOUBLE_EQ(primitive_pi(kTwoPi * 1.5e3).duration(), 2 * primitive_pi(kTwoPi * 3e3).duration() / 1.0);
  EXPECT_THROW(primitive_pi(0.0), std::invalid_argument);
  EXPECT_THROW(primitive_pi(kTwoPi * 4e3), std::invalid_argument);
}

TEST(PrimitivePi, ZeroNoiseTransfersStretchedState) {
  const auto sw = sample_exact(primitive_pi(kConst.rabiPeak), 1e-3);
  EXPECT_NEAR(stretched_transfer(evolve_unitary(sw, {})), 1.0, 1e-12);
}

TEST(Composite, NinetyX180Y90XStructure) {
  const auto w = composite(CompositeKind::NinetyX180Y90X);
  ASSERT_EQ(w.size(), 4u);
  const double unitArea = w.segmentDuration * kConst.rabiPeak;
  EXPECT_NEAR(unitArea, std::numbers::pi / 2, 1e-12);
  EXPECT_EQ(w.segments[0].phase, 0.0);
  EXPECT_EQ(w.segments[1].phase, std::numbers::pi / 2);
  EXPECT_EQ(w.segments[2].phase, std::numbers::pi / 2);
  EXPECT_EQ(w.segments[3].phase, 0.0);
}

TEST(Composite, WaltzTotalAreaThreePi) {
  const auto w = composite(CompositeKind::Waltz);
  EXPECT_NEAR(w.duration() * kConst.rabiPeak, 3 * std::numbers::pi, 1e-12);
}

TEST(Composite, AllInvertAtZeroNoise) {
  for (auto kind : {CompositeKind::NinetyX180Y90X, CompositeKind::Waltz, CompositeKind::Corpse,
                    CompositeKind::Scrofulous}) {
    const auto w = composite(kind);
    EXPECT_GE(stretched_transfer(evolve_unitary(sample_exact(w, 1e-3), {})), 0.999) << w.label;
    EXPECT_EQ(parse_composite(composite_name(kind)), kind);
  }
  EXPECT_THROW(parse_composite("bb1"), std::invalid_argument);
}

TEST(SampleExact, PreservesAreaAndValues) {
  const auto w = random_waveform(7, 1e-3, 3);
  const auto sw = sample_exact(w, 0.8e-6);
  EXPECT_LE(sw.stepDuration, 0.8e-6);
  double area = 0.0;
  for (const auto& s : w.segments) area += s.amplitude * kConst.rabiPeak * w.segmentDuration;
  EXPECT_NEAR(sw.area(), area, 1e-9 * area);
  EXPECT_EQ(sw.samples.front().phase, w.segments.front().phase);
}

TEST(Smooth, ConstantInteriorUnchanged) {
  Waveform w{{{0.7, 0.3}}, 2e-3, "optimized"};
  const auto sw = smooth(w);
  const std::size_t edge = 50;
  ASSERT_GT(sw.size(), 4 * edge);
  for (std::size_t i = edge; i + edge < sw.size(); ++i) {
    EXPECT_NEAR(sw.samples[i].rabi / (0.7 * kConst.rabiPeak), 1.0, 1e-6) << i;
    EXPECT_NEAR(sw.samples[i].phase, 0.3, 1e-6) << i;
  }
}

TEST(Smooth, DefaultGridAndZeroEdges) {
  const auto sw = smooth(random_waveform(120, 2e-3, 5));
  EXPECT_EQ(sw.size(), 2500u);
  EXPECT_NEAR(sw.stepDuration, 0.8e-6, 1e-15);
  EXPECT_EQ(sw.samples.front().rabi, 0.0);
  EXPECT_EQ(sw.samples.back().rabi, 0.0);
  for (const auto& s : sw.samples) EXPECT_GE(s.rabi, 0.0);
}

double power_fraction_above(const SampledWaveform& sw, double hz) {
  const auto x = rabi_of(sw);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, x);
  const double df = 1.0 / sw.duration();
  double total = 0.0, above = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(std::min(k, spec.size() - k)) * df;
    total += std::norm(spec[k]);
    if (f > hz) above += std::norm(spec[k]);
  }
  return above / total;
}

TEST(Smooth, SwitchingEdgesStayInsideBandwidth) {
  const auto sw = smooth(Waveform{{{0.8, 0.0}}, 2e-3, "optimized"});
  EXPECT_LE(power_fraction_above(sw, 4e4), 1e-6);
}

TEST(Smooth, RoughPulseLeakageOnlyFromEdges) {
  // Interior content sits below the cutoff; what remains comes from the ramps.
  const auto sw = smooth(random_waveform(120, 2e-3, 9));
  EXPECT_LE(power_fraction_above(sw, 4e4), 1e-4);
  EXPECT_LE(power_fraction_above(sw, 8e4), 1e-6);
}

TEST(Smooth, NearlyIdempotentInInterior) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto once = smooth(random_waveform(32, 2e-3, seed));
    const auto twice = smooth(once);
    // RMS change relative to RMS signal, edges excluded
    double power = 0.0, change = 0.0;
    for (std::size_t i = 60; i + 60 < once.size(); ++i) {
      power += once.samples[i].rabi * once.samples[i].rabi;
      change += std::pow(twice.samples[i].rabi - once.samples[i].rabi, 2);
    }
    EXPECT_LT(std::sqrt(change / power), 1e-3) << "seed " << seed;
  }
}

TEST(Smooth, PreservesInteriorArea) {
  const auto w = random_waveform(120, 2e-3, 13);
  const auto sm = smooth(w);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 50; i + 50 < sm.size(); ++i) {
    const double t = (static_cast<double>(i) + 0.5) * sm.stepDuration;
    a += w.segments[static_cast<std::size_t>(t / w.segmentDuration)].amplitude * kConst.rabiPeak;
    b += sm.samples[i].rabi;
  }
  EXPECT_NEAR(b / a, 1.0, 0.02);
}

TEST(Smooth, Errors) {
  Waveform shortPulse{{{1.0, 0.0}}, 60e-6, "optimized"};
  EXPECT_THROW(smooth(shortPulse), std::invalid_argument);
  SmoothingOptions opt;
  opt.cutoffHz = 1e6;
  EXPECT_THROW(smooth(random_waveform(8, 1e-3, 1), opt), std::invalid_argument);
}

TEST(PrepareForSimulation, SmoothsOnlyOptimized) {
  auto w = random_waveform(10, 1e-3, 2);
  EXPECT_EQ(prepare_for_simulation(w).samples.front().rabi, 0.0);
  w.label = "composite:waltz";
  EXPECT_GT(prepare_for_simulation(w).samples.front().rabi, 0.0);
}

TEST(Waveform, ValidateRejectsBadAmplitude) {
  Waveform w{{{1.2, 0.0}}, 1e-6, "x"};
  EXPECT_THROW(w.validate(), std::invalid_argument);
  w.segments[0].amplitude = 0.5;
  w.segmentDuration = 0.0;
  EXPECT_THROW(w.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace srclock
