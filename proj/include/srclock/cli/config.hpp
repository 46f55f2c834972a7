/**
 * @brief JSON run configuration. Keys carry their units (duration_s,
 * rabi_peak_hz) and unknown keys are rejected so unit typos fail loudly.
 * Frequencies given in Hz are converted to rad/s here.
 */
#pragma once

#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srclock/analysis.hpp"
#include "srclock/interferometer.hpp"
#include "srclock/optimizer.hpp"
#include "srclock/pulses.hpp"

namespace srclock::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses JSON text; syntax errors report line and column.
inline json parse_config_text(const std::string& text, const std::string& source = "config") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + e.what());
  }
}

inline json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path);
}

/// A JSON object plus its dotted path, for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("'" + display() + "' must be an object");
  }

  bool has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

  Node child(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required field '" + join(key) + "'");
    return Node((*j_)[key], join(key));
  }

  std::optional<Node> optional_child(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child(key);
  }

  template <class T>
  T required(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required field '" + join(key) + "'");
    return get<T>(key);
  }

  template <class T>
  T value(const std::string& key, const T& fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  const json& raw(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required field '" + join(key) + "'");
    return (*j_)[key];
  }

  /// Rejects keys outside `allowed`.
  void only(std::initializer_list<const char*> allowed) const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) throw ConfigError("unknown field '" + join(it.key()) + "'");
    }
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

 private:

  template <class T>
  T get(const std::string& key) const {
    try {
      return (*j_)[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field '" + join(key) + "' has the wrong type");
    }
  }

  const json* j_;
  std::string path_;
};

inline PhysicalConstants constants_from(const Node& root) {
  PhysicalConstants c;
  const auto n = root.optional_child("constants");
  if (!n) return c;
  n->only({"b0_gauss", "zeeman_ground_hz_per_gauss", "zeeman_sigma_hz_per_gauss", "zeeman_pi_hz_per_gauss",
           "doppler_unit_hz", "rabi_peak_hz", "wavelength_m", "atom_mass_kg"});
  c.b0Gauss = n->value("b0_gauss", c.b0Gauss);
  c.omegaBPerGauss = kTwoPi * n->value("zeeman_ground_hz_per_gauss", c.omegaBPerGauss / kTwoPi);
  c.mu0gSPerGauss = kTwoPi * n->value("zeeman_sigma_hz_per_gauss", c.mu0gSPerGauss / kTwoPi);
  c.mu0gPPerGauss = kTwoPi * n->value("zeeman_pi_hz_per_gauss", c.mu0gPPerGauss / kTwoPi);
  c.omegaD = kTwoPi * n->value("doppler_unit_hz", c.omegaD / kTwoPi);
  c.rabiPeak = kTwoPi * n->value("rabi_peak_hz", c.rabiPeak / kTwoPi);
  c.wavelength = n->value("wavelength_m", c.wavelength);
  c.atomMass = n->value("atom_mass_kg", c.atomMass);
  if (!(c.rabiPeak > 0.0 && c.wavelength > 0.0 && c.atomMass > 0.0 && c.b0Gauss >= 0.0))
    throw ConfigError("constants: rabi_peak_hz, wavelength_m and atom_mass_kg must be positive");
  return c;
}

inline SmoothingOptions smoothing_from(const Node& root) {
  SmoothingOptions s;
  const auto n = root.optional_child("smoothing");
  if (!n) return s;
  n->only({"step_s", "gaussian_fwhm_s", "cutoff_hz", "edge_ramp_s"});
  s.stepDuration = n->value("step_s", s.stepDuration);
  s.gaussianFwhm = n->value("gaussian_fwhm_s", s.gaussianFwhm);
  s.cutoffHz = n->value("cutoff_hz", s.cutoffHz);
  s.edgeRamp = n->value("edge_ramp_s", s.edgeRamp);
  if (!(s.stepDuration > 0.0)) throw ConfigError("smoothing.step_s must be positive");
  return s;
}

inline NoiseDistribution distribution_from(const Node& root) {
  NoiseDistribution d;
  const auto n = root.optional_child("noise_widths");
  if (!n) return d;
  n->only({"eps_plus", "eps_minus", "beta_a", "beta_v", "beta_b", "real_only"});
  d.wEpsPlus = n->value("eps_plus", d.wEpsPlus);
  d.wEpsMinus = n->value("eps_minus", d.wEpsMinus);
  d.wBetaA = n->value("beta_a", d.wBetaA);
  d.wBetaV = n->value("beta_v", d.wBetaV);
  d.wBetaB = n->value("beta_b", d.wBetaB);
  d.realOnly = n->value("real_only", d.realOnly);
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("noise_widths: ") + e.what());
  }
  return d;
}

/// A static noise point: {eps_plus, eps_minus, beta_a, beta_a_phase, beta_v, beta_b}, all real.
inline NoiseParams noise_point_from(const Node& n) {
  n.only({"eps_plus", "eps_minus", "beta_a", "beta_a_phase", "beta_v", "beta_b"});
  NoiseParams p;
  for (const char* key : {"eps_plus", "eps_minus", "beta_a", "beta_a_phase", "beta_v", "beta_b"})
    if (n.has(key)) set_channel(p, parse_channel(key), n.required<double>(key));
  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(n.display() + ": " + e.what());
  }
  return p;
}

inline OptimizationConfig optimizer_from(const Node& root, std::uint64_t seed, int workers) {
  const Node n = root.child("optimizer");
  n.only({"n_segments", "duration_s", "batch_size", "learning_rate", "final_learning_rate_fraction",
          "max_iterations", "fixed_batch", "initial_amplitude", "initial_phase_jitter_rad", "convergence_window",
          "convergence_tolerance", "min_segment_s", "ramp_aware"});
  OptimizationConfig c;
  c.nSegments = n.required<int>("n_segments");
  c.pulseDuration = n.required<double>("duration_s");
  c.batchSize = n.required<int>("batch_size");
  c.maxIterations = n.required<int>("max_iterations");
  c.learningRate = n.value("learning_rate", c.learningRate);
  c.finalLearningRateFraction = n.value("final_learning_rate_fraction", c.finalLearningRateFraction);
  c.fixedBatch = n.value("fixed_batch", c.fixedBatch);
  c.initialAmplitude = n.value("initial_amplitude", c.initialAmplitude);
  c.initialPhaseJitter = n.value("initial_phase_jitter_rad", c.initialPhaseJitter);
  c.convergenceWindow = n.value("convergence_window", c.convergenceWindow);
  c.convergenceTolerance = n.value("convergence_tolerance", c.convergenceTolerance);
  c.minSegmentDuration = n.value("min_segment_s", c.minSegmentDuration);
  c.seed = seed;
  c.workers = workers;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline Axis axis_from(const Node& n) {
  n.only({"channel", "min", "max", "points"});
  Axis a{n.required<double>("min"), n.required<double>("max"), n.required<int>("points")};
  if (a.points < 1) throw ConfigError("'" + n.join("points") + "' must be at least 1");
  return a;
}

inline NoiseChannel channel_from(const Node& n) {
  try {
    return parse_channel(n.required<std::string>("channel"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(n.join("channel") + ": " + e.what());
  }
}

/// sweep: {x: {channel, min, max, points}, y: {...}?, repeats, time_noise_rms_amplitude, time_noise_rms_phase_rad, base}
inline SweepSpec sweep_from(const Node& n, bool twoD, std::uint64_t seed, int workers) {
  n.only({"x", "y", "repeats", "time_noise_rms_amplitude", "time_noise_rms_phase_rad", "base", "evaluator"});
  SweepSpec s;
  const Node x = n.child("x");
  s.channelX = channel_from(x);
  s.x = axis_from(x);
  if (twoD) {
    const Node y = n.child("y");
    s.channelY = channel_from(y);
    s.y = axis_from(y);
    if (s.x.points < 2 || s.y.points < 2) throw ConfigError("2D sweeps need at least 2 points per axis");
  } else if (n.has("y")) {
    throw ConfigError("'" + n.join("y") + "' is only valid for 2D sweeps");
  }
  s.repeats = n.value("repeats", 1);
  s.timeNoiseRmsAmplitude = n.value("time_noise_rms_amplitude", 0.0);
  s.timeNoiseRmsPhase = n.value("time_noise_rms_phase_rad", 0.0);
  if (const auto b = n.optional_child("base")) s.base = noise_point_from(*b);
  s.seed = seed;
  s.workers = workers;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(n.display() + ": " + e.what());
  }
  return s;
}

}  // namespace srclock::cli
