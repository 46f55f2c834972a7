/**
 * @brief Large-momentum-transfer clock interferometer: pulse plan, per-arm
 * momentum bookkeeping, off-resonant action on the untransferred arm and the
 * arm phase difference at recombination.
 *
 * Each arm is an internal 20-level state plus a classical momentum label in
 * units of hbar k. An ideal initial beamsplitter (not part of the plan)
 * leaves the upper arm in |e, 9/2> with p = +1 and the lower arm in
 * |g, 9/2> with p = 0. The plan first walks the upper arm out and back, then
 * the lower arm; the arms are recombined by an ideal beamsplitter.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "srclock/propagation.hpp"
#include "srclock/time_noise.hpp"

namespace srclock {

enum class Arm { Upper = 0, Lower = 1 };
enum class PulseKind { Primitive = 0, Optimized = 1 };

inline const char* to_string(Arm a) { return a == Arm::Upper ? "upper" : "lower"; }
inline const char* to_string(PulseKind k) { return k == PulseKind::Primitive ? "primitive" : "optimized"; }

struct ArmState {
  StateVector psi;
  int momentum = 0;                     // hbar k
  Manifold manifold = Manifold::Ground;  // manifold the arm nominally occupies
};

/// Momentum change of an arm in `from` driven by a pulse travelling along `direction`.
inline int momentum_kick(Manifold from, int direction) { return from == Manifold::Ground ? direction : -direction; }

struct PulseDescriptor {
  PulseKind kind = PulseKind::Primitive;
  int direction = +1;
  Arm addressed = Arm::Upper;
  int momentumAfter = 0;  // nominal momentum of the addressed arm after the pulse
};

/// Stage sizes per half-arm walk: `primitive` square pulses then `optimized` pulses.
struct StageCounts {
  int primitive = 20;
  int optimized = 480;

  /// Divides both counts by k (the --mini scale factor).
  static StageCounts mini(int k) {
    if (k < 1 || 20 % k != 0 || 480 % k != 0)
      throw std::invalid_argument("mini factor must divide both 20 and 480");
    return {20 / k, 480 / k};
  }
  int per_walk() const { return primitive + optimized; }
};

struct SequencePlan {
  std::array<Waveform, 2> waveforms;  // indexed by PulseKind
  StageCounts counts;
  std::vector<PulseDescriptor> pulses;
  std::array<ArmState, 2> initial;  // momentum/manifold labels after the first beamsplitter

  const Waveform& waveform(PulseKind k) const { return waveforms[static_cast<int>(k)]; }
  std::size_t count(Arm a) const {
    std::size_t n = 0;
    for (const auto& p : pulses) n += p.addressed == a;
    return n;
  }
};

/**
 * Full plan: for each arm in turn, `primitive` + `optimized` pulses moving it
 * away from its start and `optimized` + `primitive` pulses bringing it back.
 * Directions follow from the momentum bookkeeping, so consecutive transfers
 * alternate. The upper arm moves towards +p and the lower arm towards -p.
 */
inline SequencePlan build_sequence(const Waveform& optimized, const Waveform& primitive, StageCounts counts = {}) {
  optimized.validate();
  primitive.validate();
  if (counts.primitive < 0 || counts.optimized < 0 || counts.per_walk() < 1)
    throw std::invalid_argument("build_sequence: stage counts must be non-negative and not both zero");
  SequencePlan plan;
  plan.waveforms = {primitive, optimized};
  plan.counts = counts;
  plan.initial[0].momentum = 1;
  plan.initial[0].manifold = Manifold::Excited;
  plan.initial[1].momentum = 0;
  plan.initial[1].manifold = Manifold::Ground;

  for (Arm arm : {Arm::Upper, Arm::Lower}) {
    const int outward = arm == Arm::Upper ? +1 : -1;
    ArmState s = plan.initial[static_cast<int>(arm)];
    auto push = [&](PulseKind kind, int sign) {
      const int direction = s.manifold == Manifold::Ground ? sign : -sign;
      s.momentum += momentum_kick(s.manifold, direction);
      s.manifold = s.manifold == Manifold::Ground ? Manifold::Excited : Manifold::Ground;
      plan.pulses.push_back({kind, direction, arm, s.momentum});
    };
    for (int i = 0; i < counts.primitive; ++i) push(PulseKind::Primitive, outward);
    for (int i = 0; i < counts.optimized; ++i) push(PulseKind::Optimized, outward);
    for (int i = 0; i < counts.optimized; ++i) push(PulseKind::Optimized, -outward);
    for (int i = 0; i < counts.primitive; ++i) push(PulseKind::Primitive, -outward);
  }
  return plan;
}

struct InterferometerOptions {
  PhysicalConstants constants;
  bool includeRecoilShift = true;  // photon recoil term in the other arm's detuning
  SmoothingOptions smoothing;
};

/**
 * Detuning (rad/s, excited minus ground in the rotating frame) seen by `arm`
 * when the laser is resonant with the addressed arm. The resonance of an arm
 * at momentum p in manifold m for a pulse along d is d p w_k + s w_k / 2 with
 * w_k = k hbar k / m and s = +1 (ground, absorption) or -1 (excited,
 * stimulated emission).
 */
inline double arm_detuning(const ArmState& arm, const ArmState& addressed, int direction,
                           const InterferometerOptions& opt = {}) {
  const double wk = opt.constants.recoilDopplerPerHbarK();
  auto sign = [](Manifold m) { return m == Manifold::Ground ? 1.0 : -1.0; };
  double delta = direction * wk * static_cast<double>(arm.momentum - addressed.momentum);
  if (opt.includeRecoilShift) delta += 0.5 * wk * (sign(arm.manifold) - sign(addressed.manifold));
  return delta;
}

struct InterferometerResult {
  double transferEfficiency = 0.0;   // |c_upper| |c_lower|: fringe amplitude at recombination
  double retainedPopulation = 0.0;   // (|c_upper|^2 + |c_lower|^2) / 2
  double armPhaseDifference = 0.0;   // arg c_upper - arg c_lower, wrapped
  std::array<ArmState, 2> arms;
  std::array<std::complex<double>, 2> amplitudes{};  // c on the intended stretched state
  double maxNormDrift = 0.0;
};

namespace detail {

inline Level stretched_in(Manifold m) { return m == Manifold::Ground ? kStretchedGround : kStretchedExcited; }

}  // namespace detail

/**
 * Propagates both arms through every pulse of the plan. Time noise, when
 * given, is evaluated at the global sequence time and is common to both arms.
 */
inline InterferometerResult run(const SequencePlan& plan, const NoiseParams& staticNoise,
                                const TimeNoise* timeNoise = nullptr, const InterferometerOptions& opt = {}) {
  validate(staticNoise);
  const std::array<SampledWaveform, 2> sampled{
      prepare_for_simulation(plan.waveforms[0], opt.smoothing, opt.constants),
      prepare_for_simulation(plan.waveforms[1], opt.smoothing, opt.constants)};
  const bool noisy = timeNoise != nullptr && !timeNoise->is_zero();

  std::array<ArmState, 2> arms = plan.initial;
  for (auto& a : arms) a.psi = basis_state(detail::stretched_in(a.manifold));

  EvolutionContext ctx;
  ctx.noise = staticNoise;
  ctx.constants = opt.constants;
  StepPropagator prop;

  // Without time noise the addressed arm sees the same drive for every pulse
  // of a given kind and direction, so its unitary can be reused.
  std::map<std::tuple<int, int>, UnitaryMatrix> addressedCache;

  InterferometerResult r;
  double t = 0.0;
  for (const auto& pulse : plan.pulses) {
    const int kind = static_cast<int>(pulse.kind);
    const SampledWaveform& base = sampled[kind];
    const SampledWaveform noisyPulse = noisy ? apply_noise(base, *timeNoise, t) : SampledWaveform{};
    const SampledWaveform& drive = noisy ? noisyPulse : base;
    ctx.direction = pulse.direction;

    ArmState& target = arms[static_cast<int>(pulse.addressed)];
    ArmState& other = arms[1 - static_cast<int>(pulse.addressed)];

    ctx.extraDetuning = arm_detuning(other, target, pulse.direction, opt);
    other.psi = evolve_state(drive, ctx, other.psi, prop);

    ctx.extraDetuning = 0.0;
    if (noisy) {
      target.psi = evolve_state(drive, ctx, target.psi, prop);
    } else {
      const auto key = std::make_tuple(kind, pulse.direction);
      auto it = addressedCache.find(key);
      if (it == addressedCache.end()) it = addressedCache.emplace(key, evolve_unitary(drive, ctx)).first;
      target.psi = (it->second * target.psi).eval();
    }
    target.momentum += momentum_kick(target.manifold, pulse.direction);
    target.manifold = target.manifold == Manifold::Ground ? Manifold::Excited : Manifold::Ground;
    if (target.momentum != pulse.momentumAfter) throw std::logic_error("interferometer: momentum bookkeeping mismatch");
    t += base.duration();

    for (const auto& a : arms) r.maxNormDrift = std::max(r.maxNormDrift, std::abs(a.psi.norm() - 1.0));
  }
  if (r.maxNormDrift > 1e-8) throw std::runtime_error("interferometer: norm drift exceeds 1e-8 (solver bug)");

  for (int a = 0; a < 2; ++a) r.amplitudes[a] = arms[a].psi(dense_index(detail::stretched_in(arms[a].manifold)));
  r.transferEfficiency = std::abs(r.amplitudes[0]) * std::abs(r.amplitudes[1]);
  r.retainedPopulation = 0.5 * (std::norm(r.amplitudes[0]) + std::norm(r.amplitudes[1]));
  r.armPhaseDifference = wrap_phase(std::arg(r.amplitudes[0]) - std::arg(r.amplitudes[1]));
  r.arms = arms;
  return r;
}

/// Total duration of the plan's pulses, used as the time-noise window.
inline double plan_duration(const SequencePlan& plan, const InterferometerOptions& opt = {}) {
  const double d[2] = {prepare_for_simulation(plan.waveforms[0], opt.smoothing, opt.constants).duration(),
                       prepare_for_simulation(plan.waveforms[1], opt.smoothing, opt.constants).duration()};
  double total = 0.0;
  for (const auto& p : plan.pulses) total += d[static_cast<int>(p.kind)];
  return total;
}

/// Wrapped difference of the arm phase differences, a minus b.
inline double differential_phase(const InterferometerResult& a, const InterferometerResult& b) {
  return wrap_phase(a.armPhaseDifference - b.armPhaseDifference);
}

}  // namespace srclock
