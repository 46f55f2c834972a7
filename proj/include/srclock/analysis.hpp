/**
 * @brief Noise-channel sweeps with repeated time-noise realizations,
 * effective-area robustness metric, circular phase statistics and the
 * Monte-Carlo fringe contrast model.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srclock/interferometer.hpp"
#include "srclock/propagation.hpp"
#include "srclock/support/format.hpp"
#include "srclock/support/parallel.hpp"
#include "srclock/support/rng.hpp"
#include "srclock/time_noise.hpp"
#include "srclock/waveform_io.hpp"

namespace srclock {

// ---------------------------------------------------------------------------
// Noise channels

enum class NoiseChannel { EpsPlus, EpsMinus, BetaA, BetaAPhase, BetaV, BetaB };

inline const char* to_string(NoiseChannel c) {
  switch (c) {
    case NoiseChannel::EpsPlus: return "eps_plus";
    case NoiseChannel::EpsMinus: return "eps_minus";
    case NoiseChannel::BetaA: return "beta_a";
    case NoiseChannel::BetaAPhase: return "beta_a_phase";
    case NoiseChannel::BetaV: return "beta_v";
    case NoiseChannel::BetaB: return "beta_b";
  }
  return "?";
}

inline NoiseChannel parse_channel(const std::string& name) {
  for (auto c : {NoiseChannel::EpsPlus, NoiseChannel::EpsMinus, NoiseChannel::BetaA, NoiseChannel::BetaAPhase,
                 NoiseChannel::BetaV, NoiseChannel::BetaB})
    if (name == to_string(c)) return c;
  throw std::invalid_argument("unknown noise channel '" + name + "'");
}

/// Sets one channel; eps and beta_a values go on the real axis, beta_a_phase on the imaginary axis.
inline void set_channel(NoiseParams& p, NoiseChannel c, double value) {
  switch (c) {
    case NoiseChannel::EpsPlus: p.epsPlus = value; break;
    case NoiseChannel::EpsMinus: p.epsMinus = value; break;
    case NoiseChannel::BetaA: p.betaA0 = {value, p.betaA0.imag()}; break;
    case NoiseChannel::BetaAPhase: p.betaA0 = {p.betaA0.real(), value}; break;
    case NoiseChannel::BetaV: p.betaV = value; break;
    case NoiseChannel::BetaB: p.betaB = value; break;
  }
}

// ---------------------------------------------------------------------------
// Circular statistics

namespace detail {

/// Circular mean of the offsets from the first sample; exact zero for identical samples.
inline double circular_offset_mean(const std::vector<double>& phases) {
  std::complex<double> s = 0.0;
  for (double p : phases) s += std::polar(1.0, wrap_phase(p - phases.front()));
  return std::abs(s) == 0.0 ? 0.0 : std::arg(s);
}

}  // namespace detail

inline double circular_mean(const std::vector<double>& phases) {
  if (phases.empty()) return 0.0;
  return wrap_phase(phases.front() + detail::circular_offset_mean(phases));
}

/// Sample standard deviation of the wrapped deviations from the circular mean.
inline double circular_std(const std::vector<double>& phases) {
  if (phases.size() < 2) return 0.0;
  const double m = detail::circular_offset_mean(phases);
  double s = 0.0;
  for (double p : phases) s += std::pow(wrap_phase(wrap_phase(p - phases.front()) - m), 2);
  return std::sqrt(s / static_cast<double>(phases.size() - 1));
}

inline double linear_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double linear_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = linear_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------------------
// Evaluators

/**
 * Maps static noise plus an optional time-noise realization to metric values.
 * evaluate() must be safe to call concurrently.
 */
struct Evaluator {
  std::string kind;
  std::vector<std::string> metrics;
  std::vector<bool> circular;  // metric is a phase
  double window = 0.0;         // time-noise normalization window, s
  std::string label;
  std::string fingerprint;     // hash of the evaluated pulse or plan
  std::function<std::vector<double>(const NoiseParams&, const TimeNoise*)> evaluate;
};

/// The pulse's own zero-noise operation on the stretched pair.
inline TargetOperation nominal_target(const Waveform& w, const SmoothingOptions& smoothing = {},
                                      const PhysicalConstants& c = {}) {
  EvolutionContext ctx;
  ctx.constants = c;
  TargetOperation t;
  t.target = restrict_to(evolve_unitary(prepare_for_simulation(w, smoothing, c), ctx), t);
  return t;
}

inline std::string waveform_fingerprint(const Waveform& w) {
  std::ostringstream os;
  write_waveform(os, w);
  return to_hex(fnv1a(os.str()));
}

/**
 * Infidelity against `target` and phase deviation of the excited stretched
 * amplitude from the target's, starting in |g, 9/2>.
 */
inline Evaluator single_pulse_evaluator(const Waveform& w, const TargetOperation& target = {},
                                        const SmoothingOptions& smoothing = {}, const PhysicalConstants& c = {}) {
  auto sampled = std::make_shared<const SampledWaveform>(prepare_for_simulation(w, smoothing, c));
  Evaluator e;
  e.kind = "single_pulse";
  e.metrics = {"infidelity", "phase_deviation"};
  e.circular = {false, true};
  e.window = sampled->duration();
  e.label = w.label;
  e.fingerprint = waveform_fingerprint(w);
  const int gi = dense_index(target.subspace[0]);
  const int ei = dense_index(target.subspace[1]);
  const std::complex<double> ideal = target.target(1, 0);
  e.evaluate = [sampled, target, c, gi, ei, ideal](const NoiseParams& p, const TimeNoise* tn) {
    EvolutionContext ctx;
    ctx.noise = p;
    ctx.constants = c;
    const bool noisy = tn != nullptr && !tn->is_zero();
    const UnitaryMatrix u = evolve_unitary(noisy ? apply_noise(*sampled, *tn) : *sampled, ctx);
    return std::vector<double>{infidelity(u, target), wrap_phase(std::arg(u(ei, gi)) - std::arg(ideal))};
  };
  return e;
}

/**
 * Transfer efficiency and arm phase difference relative to the run with no
 * static and no time noise.
 */
inline Evaluator interferometer_evaluator(const SequencePlan& plan, const InterferometerOptions& opt = {}) {
  auto shared = std::make_shared<const SequencePlan>(plan);
  const double reference = run(plan, NoiseParams{}, nullptr, opt).armPhaseDifference;
  Evaluator e;
  e.kind = "interferometer";
  e.metrics = {"transfer_efficiency", "phase_difference"};
  e.circular = {false, true};
  e.window = plan_duration(plan, opt);
  e.label = plan.waveform(PulseKind::Optimized).label;
  e.fingerprint = to_hex(fnv1a(waveform_fingerprint(plan.waveform(PulseKind::Optimized)) +
                               waveform_fingerprint(plan.waveform(PulseKind::Primitive)) +
                               std::to_string(plan.pulses.size())));
  e.evaluate = [shared, opt, reference](const NoiseParams& p, const TimeNoise* tn) {
    const auto r = run(*shared, p, tn, opt);
    return std::vector<double>{r.transferEfficiency, wrap_phase(r.armPhaseDifference - reference)};
  };
  return e;
}

// ---------------------------------------------------------------------------
// Sweeps

struct Axis {
  double min = 0.0;
  double max = 0.0;
  int points = 1;

  double at(int i) const { return points == 1 ? min : min + (max - min) * i / (points - 1); }
  double step() const { return points == 1 ? 0.0 : (max - min) / (points - 1); }
};

struct SweepSpec {
  NoiseChannel channelX = NoiseChannel::BetaV;
  std::optional<NoiseChannel> channelY;
  Axis x;
  Axis y;  // ignored without channelY
  int repeats = 1;
  double timeNoiseRmsAmplitude = 0.0;
  double timeNoiseRmsPhase = 0.0;
  std::uint64_t seed = 1;
  int workers = 1;
  NoiseParams base;  // values of the channels that are not swept

  int nx() const { return x.points; }
  int ny() const { return channelY ? y.points : 1; }

  void validate() const {
    if (x.points < 1 || (channelY && y.points < 1)) throw std::invalid_argument("sweep: axis needs at least 1 point");
    if (repeats < 1) throw std::invalid_argument("sweep: repeats must be >= 1");
    if (timeNoiseRmsAmplitude < 0.0 || timeNoiseRmsPhase < 0.0) throw std::invalid_argument("sweep: negative RMS");
    if (channelY && *channelY == channelX) throw std::invalid_argument("sweep: channels must differ");
  }
};

struct SweepResult {
  SweepSpec spec;
  std::string evaluator;
  std::string label;
  std::string fingerprint;
  std::string constantsHash;
  std::vector<std::string> metrics;
  std::vector<bool> circular;
  /// raw[m][r][i]: metric m, repeat r, grid point i = iy * nx + ix.
  std::vector<std::vector<std::vector<double>>> raw;
  std::vector<std::vector<double>> mean;  // [m][i]
  std::vector<std::vector<double>> stdev;  // [m][i], valid when repeats >= 2

  int nx() const { return spec.nx(); }
  int ny() const { return spec.ny(); }
  bool is_2d() const { return spec.channelY.has_value(); }
  bool has_std() const { return spec.repeats >= 2; }
  double x(int i) const { return spec.x.at(i % nx()); }
  double y(int i) const { return is_2d() ? spec.y.at(i / nx()) : 0.0; }

  std::size_t metric_index(const std::string& name) const {
    for (std::size_t m = 0; m < metrics.size(); ++m)
      if (metrics[m] == name) return m;
    throw std::invalid_argument("sweep result has no metric '" + name + "'");
  }
};

inline std::uint64_t repeat_noise_seed(std::uint64_t seed, int repeat) {
  return substream_seed(seed, "sweep-time-noise", static_cast<std::uint64_t>(repeat));
}

inline void compute_statistics(SweepResult& r) {
  const std::size_t points = r.raw.empty() || r.raw[0].empty() ? 0 : r.raw[0][0].size();
  r.mean.assign(r.metrics.size(), std::vector<double>(points));
  r.stdev.assign(r.metrics.size(), std::vector<double>(points));
  for (std::size_t m = 0; m < r.metrics.size(); ++m)
    for (std::size_t i = 0; i < points; ++i) {
      std::vector<double> v;
      for (const auto& rep : r.raw[m]) v.push_back(rep[i]);
      r.mean[m][i] = r.circular[m] ? circular_mean(v) : linear_mean(v);
      r.stdev[m][i] = r.circular[m] ? circular_std(v) : linear_std(v);
    }
}

/**
 * Evaluates every grid point for every repeat. Each repeat draws one
 * time-noise realization that all grid points of that repeat share.
 */
inline SweepResult sweep(const SweepSpec& spec, const Evaluator& ev, const PhysicalConstants& c = {}) {
  spec.validate();
  const int nx = spec.nx(), ny = spec.ny();
  const std::size_t points = static_cast<std::size_t>(nx) * ny;
  const bool noisy = spec.timeNoiseRmsAmplitude > 0.0 || spec.timeNoiseRmsPhase > 0.0;

  std::vector<std::optional<TimeNoise>> noise(spec.repeats);
  if (noisy)
    for (int r = 0; r < spec.repeats; ++r)
      noise[r] = synthesize_noise(spec.timeNoiseRmsAmplitude, spec.timeNoiseRmsPhase, repeat_noise_seed(spec.seed, r),
                                  ev.window);

  std::vector<std::vector<double>> slots(points * spec.repeats);
  parallel_for(slots.size(), spec.workers, [&](std::size_t task, std::size_t) {
    const std::size_t r = task / points, i = task % points;
    NoiseParams p = spec.base;
    set_channel(p, spec.channelX, spec.x.at(static_cast<int>(i % nx)));
    if (spec.channelY) set_channel(p, *spec.channelY, spec.y.at(static_cast<int>(i / nx)));
    validate(p);
    slots[task] = ev.evaluate(p, noise[r] ? &*noise[r] : nullptr);
  });

  SweepResult out;
  out.spec = spec;
  out.evaluator = ev.kind;
  out.label = ev.label;
  out.fingerprint = ev.fingerprint;
  out.constantsHash = constants_hash(c);
  out.metrics = ev.metrics;
  out.circular = ev.circular;
  out.raw.assign(ev.metrics.size(), std::vector<std::vector<double>>(spec.repeats, std::vector<double>(points)));
  for (std::size_t task = 0; task < slots.size(); ++task)
    for (std::size_t m = 0; m < ev.metrics.size(); ++m) out.raw[m][task / points][task % points] = slots[task][m];
  compute_statistics(out);
  return out;
}

// ---------------------------------------------------------------------------
// Effective area

/// Area of grid cells whose value is at most threshold, in axis units squared.
inline double effective_area(const std::vector<double>& values, const Axis& x, const Axis& y, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("effective_area: threshold must be positive");
  if (x.points < 2 || y.points < 2) throw std::invalid_argument("effective_area: needs a 2D grid");
  if (values.size() != static_cast<std::size_t>(x.points) * y.points)
    throw std::invalid_argument("effective_area: value count does not match the grid");
  const auto inside = std::count_if(values.begin(), values.end(), [&](double v) { return v <= threshold; });
  return static_cast<double>(inside) * std::abs(x.step() * y.step());
}

inline double effective_area(const SweepResult& map, double threshold, const std::string& metric = "infidelity",
                             int repeat = -1) {
  if (!map.is_2d()) throw std::invalid_argument("effective_area: needs a 2D sweep");
  const std::size_t m = map.metric_index(metric);
  const auto& values = repeat < 0 ? map.mean[m] : map.raw[m].at(repeat);
  return effective_area(values, map.spec.x, map.spec.y, threshold);
}

struct TrendPoint {
  double rms = 0.0;
  double meanArea = 0.0;
  double stdArea = 0.0;
  std::vector<double> areas;  // one per repeat
};

/**
 * Effective area of a 2D infidelity map at each time-noise RMS level, with
 * amplitude RMS x and phase RMS x rad. Each repeat is one time-noise draw.
 */
inline std::vector<TrendPoint> noise_robustness_trend(const Evaluator& ev, SweepSpec map,
                                                      const std::vector<double>& rmsLevels, int repeats,
                                                      double threshold, const PhysicalConstants& c = {}) {
  if (repeats < 2) throw std::invalid_argument("noise_robustness_trend: repeats must be >= 2");
  if (!map.channelY) throw std::invalid_argument("noise_robustness_trend: needs a 2D map");
  std::vector<TrendPoint> out;
  for (std::size_t l = 0; l < rmsLevels.size(); ++l) {
    map.timeNoiseRmsAmplitude = rmsLevels[l];
    map.timeNoiseRmsPhase = rmsLevels[l];
    map.repeats = repeats;
    const SweepResult r = sweep(map, ev, c);
    TrendPoint t;
    t.rms = rmsLevels[l];
    for (int k = 0; k < repeats; ++k) t.areas.push_back(effective_area(r, threshold, "infidelity", k));
    t.meanArea = linear_mean(t.areas);
    t.stdArea = linear_std(t.areas);
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase statistics across runs

struct PhaseMaps {
  std::vector<double> mean;
  std::vector<double> stdev;
};

/// Pointwise circular mean and standard deviation of a phase metric over runs.
inline PhaseMaps phase_statistics(const std::vector<SweepResult>& runs, const std::string& metric = "phase_difference") {
  if (runs.size() < 2) throw std::invalid_argument("phase_statistics: needs at least 2 runs");
  std::vector<std::vector<double>> maps;
  for (const auto& r : runs) {
    const std::size_t m = r.metric_index(metric);
    for (const auto& rep : r.raw[m]) maps.push_back(rep);
  }
  PhaseMaps out;
  for (std::size_t i = 0; i < maps[0].size(); ++i) {
    std::vector<double> v;
    for (const auto& m : maps) {
      if (m.size() != maps[0].size()) throw std::invalid_argument("phase_statistics: grid mismatch");
      v.push_back(m[i]);
    }
    out.mean.push_back(circular_mean(v));
    out.stdev.push_back(circular_std(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contrast

/// T(x), mean phase(x), phase std(x) on an increasing grid; linear, clamped outside.
struct LookupTable {
  std::vector<double> x;
  std::vector<double> transfer;
  std::vector<double> meanPhase;
  std::vector<double> stdPhase;

  void validate() const {
    if (x.empty()) throw std::invalid_argument("lookup table: empty");
    if (transfer.size() != x.size() || meanPhase.size() != x.size() || stdPhase.size() != x.size())
      throw std::invalid_argument("lookup table: column lengths differ");
    for (std::size_t i = 1; i < x.size(); ++i)
      if (!(x[i] > x[i - 1])) throw std::invalid_argument("lookup table: x must increase strictly");
  }

  static double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double at) {
    if (at <= xs.front()) return ys.front();
    if (at >= xs.back()) return ys.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), at) - xs.begin());
    const double f = (at - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + f * (ys[hi] - ys[hi - 1]);
  }
};

/// Builds the table from a 1D interferometer sweep (std phase is 0 without repeats).
inline LookupTable table_from_sweep(const SweepResult& r) {
  if (r.is_2d()) throw std::invalid_argument("table_from_sweep: needs a 1D sweep");
  const auto t = r.metric_index("transfer_efficiency");
  const auto p = r.metric_index("phase_difference");
  LookupTable table;
  for (int i = 0; i < r.nx(); ++i) {
    table.x.push_back(r.x(i));
    table.transfer.push_back(r.mean[t][i]);
    table.meanPhase.push_back(r.mean[p][i]);
    table.stdPhase.push_back(r.has_std() ? r.stdev[p][i] : 0.0);
  }
  // Unwrap so interpolation between neighbours does not cross the branch cut.
  for (std::size_t i = 1; i < table.meanPhase.size(); ++i)
    table.meanPhase[i] = table.meanPhase[i - 1] + wrap_phase(table.meanPhase[i] - table.meanPhase[i - 1]);
  return table;
}

struct ContrastSpec {
  std::string channel = "beta_v";
  std::vector<double> widths;
  int nSamples = 50000;
  int phiPoints = 256;  // over [0, 4 pi)
  LookupTable table;
  int workers = 1;

  void validate() const {
    if (nSamples < 1000) throw std::invalid_argument("contrast: n_samples must be >= 1000");
    if (phiPoints < 8) throw std::invalid_argument("contrast: phi grid too coarse");
    for (double w : widths)
      if (!(w >= 0.0)) throw std::invalid_argument("contrast: widths must be non-negative");
    table.validate();
  }
};

struct ContrastPoint {
  double width = 0.0;
  double contrast = 0.0;
  std::vector<double> fringe;  // F(Phi) on the grid
};

/**
 * F(Phi) = mean_i [1/2 + T(x_i) cos(Phi + dphi_i) / 2] with x_i ~ N(0, w) and
 * dphi_i ~ N(mean(x_i), std(x_i)); contrast is max F - min F on the grid.
 */
inline std::vector<ContrastPoint> contrast(const ContrastSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::vector<ContrastPoint> out(spec.widths.size());
  parallel_for(spec.widths.size(), spec.workers, [&](std::size_t k, std::size_t) {
    Rng rng = make_rng(seed, "contrast", k);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double w = spec.widths[k];
    // F(Phi) = 1/2 + (A cos Phi - B sin Phi) / 2 with A, B the sample means below.
    double a = 0.0, b = 0.0;
    for (int i = 0; i < spec.nSamples; ++i) {
      const double x = w * unit(rng);
      const double t = LookupTable::interpolate(spec.table.x, spec.table.transfer, x);
      const double phase = LookupTable::interpolate(spec.table.x, spec.table.meanPhase, x) +
                           LookupTable::interpolate(spec.table.x, spec.table.stdPhase, x) * unit(rng);
      a += t * std::cos(phase);
      b += t * std::sin(phase);
    }
    a /= spec.nSamples;
    b /= spec.nSamples;
    ContrastPoint& p = out[k];
    p.width = w;
    for (int j = 0; j < spec.phiPoints; ++j) {
      const double phi = 4.0 * std::numbers::pi * j / spec.phiPoints;
      p.fringe.push_back(std::clamp(0.5 + 0.5 * (a * std::cos(phi) - b * std::sin(phi)), 0.0, 1.0));
    }
    const auto [lo, hi] = std::minmax_element(p.fringe.begin(), p.fringe.end());
    p.contrast = *hi - *lo;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

/// Columns: x [, y], then <metric>_mean for each metric, then <metric>_std when repeats >= 2.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << to_string(r.spec.channelX);
  if (r.is_2d()) os << ',' << to_string(*r.spec.channelY);
  for (const auto& m : r.metrics) os << ',' << m << "_mean";
  if (r.has_std())
    for (const auto& m : r.metrics) os << ',' << m << "_std";
  os << '\n';
  const int points = r.nx() * r.ny();
  for (int i = 0; i < points; ++i) {
    os << format_double(r.x(i));
    if (r.is_2d()) os << ',' << format_double(r.y(i));
    for (std::size_t m = 0; m < r.metrics.size(); ++m) os << ',' << format_double(r.mean[m][i]);
    if (r.has_std())
      for (std::size_t m = 0; m < r.metrics.size(); ++m) os << ',' << format_double(r.stdev[m][i]);
    os << '\n';
  }
}

inline nlohmann::json sweep_metadata(const SweepResult& r) {
  const auto& s = r.spec;
  nlohmann::json j;
  j["evaluator"] = r.evaluator;
  j["pulse_label"] = r.label;
  j["pulse_hash"] = r.fingerprint;
  j["constants_hash"] = r.constantsHash;
  j["seed"] = s.seed;
  j["repeats"] = s.repeats;
  j["time_noise_rms_amplitude"] = s.timeNoiseRmsAmplitude;
  j["time_noise_rms_phase"] = s.timeNoiseRmsPhase;
  j["channel_x"] = to_string(s.channelX);
  j["x"] = {{"min", s.x.min}, {"max", s.x.max}, {"points", s.x.points}};
  if (s.channelY) {
    j["channel_y"] = to_string(*s.channelY);
    j["y"] = {{"min", s.y.min}, {"max", s.y.max}, {"points", s.y.points}};
  }
  j["metrics"] = r.metrics;
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < s.repeats; ++k) seeds.push_back(repeat_noise_seed(s.seed, k));
  j["time_noise_seeds"] = seeds;
  return j;
}

/// Writes <path> and the sidecar <path>.meta.json.
inline void save_sweep(const std::string& path, const SweepResult& r) {
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("cannot write " + path);
  write_sweep_csv(csv, r);
  std::ofstream meta(path + ".meta.json");
  if (!meta) throw std::runtime_error("cannot write " + path + ".meta.json");
  meta << sweep_metadata(r).dump(2) << '\n';
}

inline void write_contrast_csv(std::ostream& os, const std::string& channel, const std::vector<ContrastPoint>& points) {
  os << "channel,width,contrast\n";
  for (const auto& p : points) os << channel << ',' << format_double(p.width) << ',' << format_double(p.contrast) << '\n';
}

}  // namespace srclock
