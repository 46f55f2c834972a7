/**
 * @brief Control waveforms: segmented pulses, primitive and composite pulses,
 * and the resampling/smoothing pipeline that turns a segmented waveform into
 * the dense sample grid used for simulation.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unsupported/Eigen/FFT>
#include <vector>

#include "srclock/atoms.hpp"

namespace srclock {

/// One piecewise-constant control segment; amplitude is a fraction of the peak Rabi frequency.
struct Segment {
  double amplitude = 0.0;
  double phase = 0.0;  // rad, unwrapped

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// N-segment control waveform. Its 2N numbers are the optimization variables.
struct Waveform {
  std::vector<Segment> segments;
  double segmentDuration = 0.0;  // s
  std::string label;

  std::size_t size() const { return segments.size(); }
  double duration() const { return segmentDuration * static_cast<double>(segments.size()); }

  void validate() const {
    if (segments.empty()) throw std::invalid_argument("waveform has no segments");
    if (!(segmentDuration > 0.0)) throw std::invalid_argument("segment duration must be positive");
    for (const auto& s : segments) {
      if (!(s.amplitude >= 0.0 && s.amplitude <= 1.0))
        throw std::invalid_argument("amplitude fraction outside [0, 1]");
      if (!std::isfinite(s.phase)) throw std::invalid_argument("non-finite phase");
    }
  }

  friend bool operator==(const Waveform&, const Waveform&) = default;
};

/// A drive value held for one step of a dense time grid.
struct Sample {
  double rabi = 0.0;   // rad/s
  double phase = 0.0;  // rad

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct SampledWaveform {
  std::vector<Sample> samples;
  double stepDuration = 0.0;  // s

  std::size_t size() const { return samples.size(); }
  double duration() const { return stepDuration * static_cast<double>(samples.size()); }

  /// Integral of the Rabi frequency over the pulse (pulse area).
  double area() const {
    double a = 0.0;
    for (const auto& s : samples) a += s.rabi;
    return a * stepDuration;
  }

  friend bool operator==(const SampledWaveform&, const SampledWaveform&) = default;
};

/// Square resonant pi pulse at the given Rabi frequency.
inline Waveform primitive_pi(double rabi, const PhysicalConstants& c = {}) {
  if (!(rabi > 0.0)) throw std::invalid_argument("primitive_pi: rabi must be positive");
  if (rabi > c.rabiPeak * (1.0 + 1e-12))
    throw std::invalid_argument("primitive_pi: rabi exceeds the configured peak");
  Waveform w;
  w.segments = {{std::min(1.0, rabi / c.rabiPeak), 0.0}};
  w.segmentDuration = std::numbers::pi / rabi;
  w.label = "primitive";
  return w;
}

enum class CompositeKind { NinetyX180Y90X, Waltz, Corpse, Scrofulous };

inline CompositeKind parse_composite(std::string_view name) {
  if (name == "90x180y90x") return CompositeKind::NinetyX180Y90X;
  if (name == "waltz") return CompositeKind::Waltz;
  if (name == "corpse") return CompositeKind::Corpse;
  if (name == "scrofulous") return CompositeKind::Scrofulous;
  throw std::invalid_argument("unknown composite pulse '" + std::string(name) + "'");
}

inline std::string_view composite_name(CompositeKind kind) {
  switch (kind) {
    case CompositeKind::NinetyX180Y90X: return "90x180y90x";
    case CompositeKind::Waltz: return "waltz";
    case CompositeKind::Corpse: return "corpse";
    case CompositeKind::Scrofulous: return "scrofulous";
  }
  return "";
}

/**
 * Composite inversion pulses at the peak Rabi frequency. Sub-pulses are
 * expressed as whole multiples of a common unit rotation so the result is a
 * uniform-segment Waveform. Sub-pulse list: (rotation angle, phase).
 */
inline Waveform composite(CompositeKind kind, const PhysicalConstants& c = {}) {
  constexpr double pi = std::numbers::pi;
  struct Rotation {
    int units;
    double phase;
  };
  double unit = 0.0;
  std::vector<Rotation> rotations;
  switch (kind) {
    case CompositeKind::NinetyX180Y90X:
      unit = pi / 2;
      rotations = {{1, 0.0}, {2, pi / 2}, {1, 0.0}};
      break;
    case CompositeKind::Waltz:  // 90x 180-x 270x
      unit = pi / 2;
      rotations = {{1, 0.0}, {2, pi}, {3, 0.0}};
      break;
    case CompositeKind::Corpse:  // 420x 300-x 60x for a pi rotation
      unit = pi / 3;
      rotations = {{7, 0.0}, {5, pi}, {1, 0.0}};
      break;
    case CompositeKind::Scrofulous:  // 180_60 180_300 180_60
      unit = pi;
      rotations = {{1, pi / 3}, {1, -pi / 3}, {1, pi / 3}};
      break;
  }
  Waveform w;
  w.segmentDuration = unit / c.rabiPeak;
  w.label = "composite:" + std::string(composite_name(kind));
  for (const auto& r : rotations)
    for (int i = 0; i < r.units; ++i) w.segments.push_back({1.0, r.phase});
  return w;
}

/**
 * Piecewise-constant sampling without any filtering. Each segment is split
 * into the smallest number of equal steps not longer than maxStep.
 */
inline SampledWaveform sample_exact(const Waveform& w, double maxStep, const PhysicalConstants& c = {}) {
  w.validate();
  if (!(maxStep > 0.0)) throw std::invalid_argument("sample_exact: step must be positive");
  const auto perSegment =
      static_cast<std::size_t>(std::max(1.0, std::ceil(w.segmentDuration / maxStep - 1e-9)));
  SampledWaveform sw;
  sw.stepDuration = w.segmentDuration / static_cast<double>(perSegment);
  sw.samples.reserve(perSegment * w.size());
  for (const auto& s : w.segments)
    for (std::size_t i = 0; i < perSegment; ++i) sw.samples.push_back({s.amplitude * c.rabiPeak, s.phase});
  return sw;
}

struct SmoothingOptions {
  double stepDuration = 0.8e-6;  // dense grid step, s
  double gaussianFwhm = 1.6e-6;  // moving-average kernel width, s
  double cutoffHz = 4.0e4;       // hard spectral cutoff
  double edgeRamp = 40.0e-6;     // raised-cosine switching time at each end, s
};

namespace detail {

inline std::vector<double> gaussian_moving_average(const std::vector<double>& x, double sigmaSamples) {
  if (sigmaSamples <= 0.0 || x.size() < 2) return x;
  const int half = static_cast<int>(std::ceil(4.0 * sigmaSamples));
  std::vector<double> kernel(2 * half + 1);
  double norm = 0.0;
  for (int k = -half; k <= half; ++k) {
    kernel[k + half] = std::exp(-0.5 * (k / sigmaSamples) * (k / sigmaSamples));
    norm += kernel[k + half];
  }
  for (double& v : kernel) v /= norm;

  const int n = static_cast<int>(x.size());
  auto reflect = [n](int i) {
    // Half-sample symmetric extension: ... x1 x0 | x0 x1 ... keeps constants exact.
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  std::vector<double> y(x.size());
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = -half; k <= half; ++k) acc += kernel[k + half] * x[reflect(i + k)];
    y[i] = acc;
  }
  return y;
}

/// Removes every Fourier component above cutoff of the even (mirror) extension of x.
inline std::vector<double> spectral_lowpass(const std::vector<double>& x, double step, double cutoffHz) {
  const std::size_t n = x.size();
  std::vector<double> ext(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    ext[i] = x[i];
    ext[2 * n - 1 - i] = x[i];
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, ext);
  const double df = 1.0 / (static_cast<double>(2 * n) * step);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const std::size_t bin = std::min(k, spec.size() - k);
    if (static_cast<double>(bin) * df > cutoffHz) spec[k] = 0.0;
  }
  std::vector<double> back;
  fft.inv(back, spec);
  back.resize(n);
  return back;
}

inline SampledWaveform smooth_traces(std::vector<double> rabi, std::vector<double> phase, double step,
                                     const SmoothingOptions& opt) {
  const double nyquist = 0.5 / step;
  if (!(opt.cutoffHz < nyquist)) throw std::invalid_argument("smooth: cutoff at or above Nyquist");
  const double duration = step * static_cast<double>(rabi.size());
  if (opt.edgeRamp > 0.5 * duration) throw std::invalid_argument("smooth: edge ramp longer than half the pulse");

  const double sigma = opt.gaussianFwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))) / step;
  rabi = spectral_lowpass(gaussian_moving_average(rabi, sigma), step, opt.cutoffHz);
  phase = spectral_lowpass(gaussian_moving_average(phase, sigma), step, opt.cutoffHz);

  // Ramps come last so the ends are exactly zero and the interior is untouched.
  const auto n = rabi.size();
  const auto edge = std::min(n / 2, static_cast<std::size_t>(std::llround(opt.edgeRamp / step)));
  for (std::size_t k = 0; k < edge; ++k) {
    const double w = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(edge)));
    rabi[k] *= w;
    rabi[n - 1 - k] *= w;
  }

  SampledWaveform out;
  out.stepDuration = step;
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = {std::max(0.0, rabi[i]), phase[i]};
  return out;
}

}  // namespace detail

/**
 * Dense resampling followed by a Gaussian-weighted moving average, a hard
 * spectral cutoff and raised-cosine switching edges that reach exactly zero
 * Rabi frequency at both ends. The step is adjusted slightly if needed so the
 * grid tiles the pulse exactly.
 */
inline SampledWaveform smooth(const Waveform& w, const SmoothingOptions& opt = {},
                              const PhysicalConstants& c = {}) {
  w.validate();
  const double duration = w.duration();
  const auto n = static_cast<std::size_t>(std::max<long long>(2, std::llround(duration / opt.stepDuration)));
  const double step = duration / static_cast<double>(n);
  std::vector<double> rabi(n), phase(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * step;
    const auto seg = std::min(w.size() - 1, static_cast<std::size_t>(t / w.segmentDuration));
    rabi[i] = w.segments[seg].amplitude * c.rabiPeak;
    phase[i] = w.segments[seg].phase;
  }
  return detail::smooth_traces(std::move(rabi), std::move(phase), step, opt);
}

/// Re-applies the pipeline to an already sampled waveform (on its own grid).
inline SampledWaveform smooth(const SampledWaveform& sw, const SmoothingOptions& opt = {}) {
  if (sw.samples.size() < 2) throw std::invalid_argument("smooth: need at least two samples");
  std::vector<double> rabi(sw.size()), phase(sw.size());
  for (std::size_t i = 0; i < sw.size(); ++i) {
    rabi[i] = sw.samples[i].rabi;
    phase[i] = sw.samples[i].phase;
  }
  return detail::smooth_traces(std::move(rabi), std::move(phase), sw.stepDuration, opt);
}

/// Optimized waveforms are smoothed for simulation; square pulses are sampled as-is.
inline bool is_optimized(const Waveform& w) { return w.label.rfind("optimized", 0) == 0; }

inline SampledWaveform prepare_for_simulation(const Waveform& w, const SmoothingOptions& opt = {},
                                              const PhysicalConstants& c = {}) {
  return is_optimized(w) ? smooth(w, opt, c) : sample_exact(w, opt.stepDuration, c);
}

}  // namespace srclock
