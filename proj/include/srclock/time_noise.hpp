/**
 * @brief Time-dependent laser amplitude and phase noise built from random
 * sums of sinusoids, f(t) = sum_i A_i cos(w_i t) + B_i sin(w_i t).
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "srclock/atoms.hpp"
#include "srclock/pulses.hpp"

namespace srclock {

struct NoiseComponent {
  double omega = 0.0;  // rad/s
  double cosAmp = 0.0;
  double sinAmp = 0.0;
};

/// A real trace represented exactly by its sinusoidal components.
class NoiseTrace {
 public:
  NoiseTrace() = default;
  explicit NoiseTrace(std::vector<NoiseComponent> components) : components_(std::move(components)) {}

  const std::vector<NoiseComponent>& components() const { return components_; }
  bool empty() const { return components_.empty(); }

  double operator()(double t) const {
    double v = 0.0;
    for (const auto& c : components_) v += c.cosAmp * std::cos(c.omega * t) + c.sinAmp * std::sin(c.omega * t);
    return v;
  }

  /// Values at t0 + (i + 1/2) dt for i in [0, n), via phasor recurrence.
  std::vector<double> sample_midpoints(double t0, double dt, std::size_t n) const {
    std::vector<double> out(n, 0.0);
    for (const auto& c : components_) {
      if (c.cosAmp == 0.0 && c.sinAmp == 0.0) continue;
      std::complex<double> z = std::polar(1.0, c.omega * (t0 + 0.5 * dt));
      const std::complex<double> rot = std::polar(1.0, c.omega * dt);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] += c.cosAmp * z.real() + c.sinAmp * z.imag();
        z *= rot;
      }
    }
    return out;
  }

  /// Exact time average of f(t)^2 over [t0, t1].
  double mean_square(double t0, double t1) const {
    if (!(t1 > t0)) throw std::invalid_argument("mean_square: empty window");
    const std::size_t n = components_.size();
    std::vector<double> c0(n), s0(n), c1(n), s1(n);
    for (std::size_t i = 0; i < n; ++i) {
      c0[i] = std::cos(components_[i].omega * t0);
      s0[i] = std::sin(components_[i].omega * t0);
      c1[i] = std::cos(components_[i].omega * t1);
      s1[i] = std::sin(components_[i].omega * t1);
    }
    // int cos(w t) and int sin(w t) over the window, with sin/cos of w t
    // supplied through angle-addition identities.
    const double len = t1 - t0;
    auto icos = [len](double w, double sinW1, double sinW0) { return w == 0.0 ? len : (sinW1 - sinW0) / w; };
    auto isin = [](double w, double cosW1, double cosW0) { return w == 0.0 ? 0.0 : (cosW0 - cosW1) / w; };
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a = components_[i];
      for (std::size_t j = 0; j < n; ++j) {
        const auto& b = components_[j];
        const double diff = a.omega - b.omega, sum = a.omega + b.omega;
        const double sinDiff1 = s1[i] * c1[j] - c1[i] * s1[j], sinDiff0 = s0[i] * c0[j] - c0[i] * s0[j];
        const double sinSum1 = s1[i] * c1[j] + c1[i] * s1[j], sinSum0 = s0[i] * c0[j] + c0[i] * s0[j];
        const double cosDiff1 = c1[i] * c1[j] + s1[i] * s1[j], cosDiff0 = c0[i] * c0[j] + s0[i] * s0[j];
        const double cosSum1 = c1[i] * c1[j] - s1[i] * s1[j], cosSum0 = c0[i] * c0[j] - s0[i] * s0[j];
        const double iDiff = icos(diff, sinDiff1, sinDiff0), iSum = icos(sum, sinSum1, sinSum0);
        const double cc = 0.5 * (iDiff + iSum);
        const double ss = 0.5 * (iDiff - iSum);
        const double cs = 0.5 * (isin(sum, cosSum1, cosSum0) - isin(diff, cosDiff1, cosDiff0));
        total += a.cosAmp * b.cosAmp * cc + a.sinAmp * b.sinAmp * ss + 2.0 * a.cosAmp * b.sinAmp * cs;
      }
    }
    return total / len;
  }

  void scale(double factor) {
    for (auto& c : components_) {
      c.cosAmp *= factor;
      c.sinAmp *= factor;
    }
  }

 private:
  std::vector<NoiseComponent> components_;
};

struct NoiseBand {
  double lowHz = 50.0;
  double highHz = 1.0e5;
};

/// Amplitude (fractional) and phase (rad) noise realizations.
struct TimeNoise {
  NoiseTrace amplitude;
  NoiseTrace phase;
  double rmsAmplitude = 0.0;
  double rmsPhase = 0.0;
  std::uint64_t seed = 0;
  double window = 0.0;  // normalization window [0, window], s
  NoiseBand band;

  bool is_zero() const { return rmsAmplitude == 0.0 && rmsPhase == 0.0; }
};

namespace detail {

inline NoiseTrace random_trace(std::mt19937_64& rng, std::size_t nComponents, const NoiseBand& band, double rms,
                               double window) {
  std::uniform_real_distribution<double> freq(band.lowHz, band.highHz);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<NoiseComponent> comps(nComponents);
  for (auto& c : comps) {
    c.omega = kTwoPi * freq(rng);
    c.cosAmp = gauss(rng);
    c.sinAmp = gauss(rng);
  }
  NoiseTrace trace(std::move(comps));
  if (rms == 0.0) {
    trace.scale(0.0);
  } else {
    trace.scale(rms / std::sqrt(trace.mean_square(0.0, window)));
  }
  return trace;
}

}  // namespace detail

/**
 * Draws amplitude and phase traces with nComponents sinusoids each, frequencies
 * uniform in the band and Gaussian coefficients, then rescales each trace so
 * its RMS over [0, window] equals the request.
 */
inline TimeNoise synthesize_noise(double rmsAmplitude, double rmsPhase, std::uint64_t seed, double window,
                                  std::size_t nComponents = 1000, NoiseBand band = {}) {
  if (rmsAmplitude < 0.0 || rmsPhase < 0.0) throw std::invalid_argument("synthesize_noise: negative RMS");
  if (!(window > 0.0)) throw std::invalid_argument("synthesize_noise: window must be positive");
  if (!(band.lowHz > 0.0 && band.highHz > band.lowHz)) throw std::invalid_argument("synthesize_noise: bad band");
  std::mt19937_64 rng(seed);
  TimeNoise tn;
  tn.rmsAmplitude = rmsAmplitude;
  tn.rmsPhase = rmsPhase;
  tn.seed = seed;
  tn.window = window;
  tn.band = band;
  tn.amplitude = detail::random_trace(rng, nComponents, band, rmsAmplitude, window);
  tn.phase = detail::random_trace(rng, nComponents, band, rmsPhase, window);
  return tn;
}

/// Multiplies each Rabi sample by 1 + a(t) and adds p(t) to its phase; t is the sample midpoint offset by t0.
inline SampledWaveform apply_noise(const SampledWaveform& sw, const TimeNoise& tn, double t0 = 0.0) {
  if (tn.is_zero()) return sw;
  SampledWaveform out = sw;
  const auto amp = tn.amplitude.sample_midpoints(t0, sw.stepDuration, sw.size());
  const auto ph = tn.phase.sample_midpoints(t0, sw.stepDuration, sw.size());
  for (std::size_t i = 0; i < sw.size(); ++i) {
    out.samples[i].rabi *= 1.0 + amp[i];
    out.samples[i].phase += ph[i];
  }
  return out;
}

}  // namespace srclock
