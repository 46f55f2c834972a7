/**
 * @brief Robust pulse optimization against batches of static noise
 * trajectories.
 *
 * The cost is the mean subspace infidelity over the batch. Gradients with
 * respect to the segment amplitudes and phases are exact: each segment
 * propagator exp(-i H dt) is differentiated in the eigenbasis of H using
 * divided differences of exp(-i lambda dt).
 */
#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "srclock/propagation.hpp"
#include "srclock/support/parallel.hpp"
#include "srclock/support/rng.hpp"

namespace srclock {

/// Widths of zero-centred Gaussians for each static noise channel.
struct NoiseDistribution {
  double wEpsPlus = 0.05;
  double wEpsMinus = 0.05;
  double wBetaA = 0.02;
  double wBetaV = 1.0;
  double wBetaB = 0.1;
  bool realOnly = false;  // draw eps+-, betaA on the real axis only

  void validate() const {
    for (double w : {wEpsPlus, wEpsMinus, wBetaA, wBetaV, wBetaB})
      if (!(w >= 0.0)) throw std::invalid_argument("noise widths must be non-negative");
  }
};

/**
 * nB independent draws. Complex channels get independent real and imaginary
 * parts of width w/sqrt(2) (so E|x|^2 = w^2) unless realOnly is set. Pairs
 * with |eps+|^2 + |eps-|^2 > 1 are redrawn.
 */
inline std::vector<NoiseParams> sample_batch(const NoiseDistribution& dist, std::size_t nB, Rng& rng) {
  if (nB < 1) throw std::invalid_argument("sample_batch: batch size must be at least 1");
  dist.validate();
  std::normal_distribution<double> unit(0.0, 1.0);
  auto complexDraw = [&](double w) {
    if (dist.realOnly) return std::complex<double>(w * unit(rng), 0.0);
    const double s = w / std::sqrt(2.0);
    const double re = s * unit(rng);
    return std::complex<double>(re, s * unit(rng));
  };
  std::vector<NoiseParams> batch(nB);
  for (auto& b : batch) {
    do {
      b.epsPlus = complexDraw(dist.wEpsPlus);
      b.epsMinus = complexDraw(dist.wEpsMinus);
    } while (b.epsSquared() > 1.0);
    b.betaA0 = complexDraw(dist.wBetaA);
    b.betaV = dist.wBetaV * unit(rng);
    b.betaB = dist.wBetaB * unit(rng);
  }
  return batch;
}

inline std::vector<NoiseParams> sample_batch(const NoiseDistribution& dist, std::size_t nB, std::uint64_t seed) {
  Rng rng(seed);
  return sample_batch(dist, nB, rng);
}

struct BatchCost {
  double cost = 0.0;
  std::vector<double> perTrajectory;
};

struct BatchGradient {
  double cost = 0.0;
  std::vector<double> perTrajectory;
  /// d cost / d c, ordered [amplitude_0 .. amplitude_{N-1}, phase_0 .. phase_{N-1}].
  std::vector<double> gradient;
};

/// Fixed model inputs shared by every trajectory.
struct ControlModel {
  PhysicalConstants constants;
  CouplingTable couplings = clebsch_gordan_ratios();
  TargetOperation target;
  int direction = +1;
  /// Switching ramp applied by smoothing (0: plain piecewise-constant model).
  double edgeRamp = 0.0;
  double rampSampleStep = 0.8e-6;  // grid the ramp is defined on, s
  int rampSubsteps = 10;           // piecewise-constant pieces per ramp
};

/// Model whose edge segments follow the switching ramps that smoothing will apply.
inline ControlModel ramp_aware(ControlModel model, const SmoothingOptions& smoothing) {
  model.edgeRamp = smoothing.edgeRamp;
  model.rampSampleStep = smoothing.stepDuration;
  const auto samples = std::llround(smoothing.edgeRamp / smoothing.stepDuration);
  model.rampSubsteps = 1;
  for (int d = 10; d > 1; --d)
    if (samples % d == 0) {
      model.rampSubsteps = d;
      break;
    }
  return model;
}

namespace detail {

/// One constant-drive piece: segment index, envelope factor on its Rabi frequency, duration.
struct DriveStep {
  std::size_t segment;
  double envelope;
  double duration;
};

/**
 * Time-ordered pieces of the waveform. With an edge ramp the first and last
 * segments start and end with rampSubsteps pieces whose envelopes are the mean
 * of the raised-cosine sample weights they cover.
 */
inline std::vector<DriveStep> drive_steps(const Waveform& w, const ControlModel& model) {
  const std::size_t n = w.size();
  const double dt = w.segmentDuration;
  std::vector<DriveStep> steps;
  const auto samples = model.edgeRamp > 0.0 ? std::llround(model.edgeRamp / model.rampSampleStep) : 0LL;
  if (samples == 0) {
    for (std::size_t k = 0; k < n; ++k) steps.push_back({k, 1.0, dt});
    return steps;
  }
  const int pieces = std::max(1, model.rampSubsteps);
  if (samples % pieces != 0) throw std::invalid_argument("control model: ramp samples must divide into substeps");
  const double ramp = static_cast<double>(samples) * model.rampSampleStep;
  if (ramp > dt * (n == 1 ? 0.5 : 1.0))
    throw std::invalid_argument("control model: edge ramp longer than an edge segment");
  std::vector<double> env(pieces, 0.0);
  const long long per = samples / pieces;
  for (long long k = 0; k < samples; ++k)
    env[k / per] += 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(samples))) /
                    static_cast<double>(per);
  const double piece = ramp / pieces;
  for (int j = 0; j < pieces; ++j) steps.push_back({0, env[j], piece});
  if (n == 1) {
    if (dt - 2 * ramp > 0.0) steps.push_back({0, 1.0, dt - 2 * ramp});
  } else {
    if (dt - ramp > 0.0) steps.push_back({0, 1.0, dt - ramp});
    for (std::size_t k = 1; k + 1 < n; ++k) steps.push_back({k, 1.0, dt});
    if (dt - ramp > 0.0) steps.push_back({n - 1, 1.0, dt - ramp});
  }
  for (int j = pieces; j-- > 0;) steps.push_back({n - 1, env[j], piece});
  return steps;
}

struct TrajectoryResult {
  double infidelity = 0.0;
  std::vector<double> gradient;  // empty unless requested
};

/// Divided difference of f(x) = exp(-i x dt) at (a, b), stable as a -> b.
inline std::complex<double> exp_divided_difference(double a, double b, double dt) {
  const double half = 0.5 * (a - b) * dt;
  const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
  return std::complex<double>(0.0, -dt) * std::polar(1.0, -0.5 * (a + b) * dt) * sinc;
}

inline TrajectoryResult trajectory(const Waveform& w, const NoiseParams& noise, const ControlModel& model,
                                   bool withGradient) {
  using Cx = std::complex<double>;
  using Block2 = Eigen::Matrix<Cx, kDim, 2>;
  using Row2 = Eigen::Matrix<Cx, 2, kDim>;

  const std::size_t n = w.size();
  const double peak = model.constants.rabiPeak;
  const HamiltonianMatrix drift = drift_hamiltonian<double>(noise, model.direction, model.constants);
  const CouplingBlock<double> block = coupling_block<double>(noise, model.couplings);
  const std::array<int, 2> sub{dense_index(model.target.subspace[0]), dense_index(model.target.subspace[1])};
  const Matrix2c targetAdj = model.target.target.adjoint();
  const Cx norm = (targetAdj * model.target.target).trace();
  const std::vector<DriveStep> steps = drive_steps(w, model);
  const std::size_t m = steps.size();

  std::vector<CMatrix<double>> vecs(m);
  std::vector<Eigen::Matrix<double, kDim, 1>> vals(m);
  std::vector<CMatrix<double>> units(m);
  std::vector<Block2> forward(m + 1);  // forward[k] = U_k ... U_1 P
  Eigen::SelfAdjointEigenSolver<CMatrix<double>> solver;

  forward[0].setZero();
  forward[0](sub[0], 0) = 1.0;
  forward[0](sub[1], 1) = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto& seg = w.segments[steps[k].segment];
    HamiltonianMatrix h = drift;
    add_drive<double>(h, block, seg.amplitude * steps[k].envelope * peak, seg.phase);
    solver.compute(h, Eigen::ComputeEigenvectors);
    vecs[k] = solver.eigenvectors();
    vals[k] = solver.eigenvalues();
    CVector<double> phases;
    for (int j = 0; j < kDim; ++j) phases(j) = std::polar(1.0, -vals[k](j) * steps[k].duration);
    units[k].noalias() = vecs[k] * phases.asDiagonal() * vecs[k].adjoint();
    forward[k + 1].noalias() = units[k] * forward[k];
  }

  Matrix2c sub2;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) sub2(a, b) = forward[m](sub[a], b);
  const Cx z = (targetAdj * sub2).trace() / norm;

  TrajectoryResult out;
  out.infidelity = std::clamp(1.0 - std::norm(z), 0.0, 1.0);
  if (!withGradient) return out;

  out.gradient.assign(2 * n, 0.0);
  Row2 left = Row2::Zero();  // P^T U_N ... U_{k+1}
  left(0, sub[0]) = 1.0;
  left(1, sub[1]) = 1.0;
  CMatrix<double> gamma, g, b;
  for (std::size_t kk = m; kk-- > 0;) {
    const DriveStep& step = steps[kk];
    const auto& seg = w.segments[step.segment];
    const double dt = step.duration;
    const auto& v = vecs[kk];
    const auto& lam = vals[kk];
    // dz = Tr(M dU) with M = R T^dag L / norm; in the eigenbasis Y = V^dag M V.
    const Block2 a = v.adjoint() * forward[kk];
    const Row2 c = (targetAdj * left) * v / norm;
    const CMatrix<double> y = a * c;
    for (int l = 0; l < kDim; ++l)
      for (int j = 0; j < kDim; ++j) gamma(l, j) = exp_divided_difference(lam(l), lam(j), dt);
    g = y.transpose().cwiseProduct(gamma);
    b.noalias() = v * g.transpose() * v.adjoint();

    // Tr(B dH) for dH = D below the diagonal and D^dag above, D = s * K.
    Cx traceWithBlock = 0.0;  // sum B(g,e) K(e,g) e^{i phi}
    Cx traceWithAdj = 0.0;    // sum B(e,g) conj(K(e,g) e^{i phi})
    const Cx rot = std::polar(1.0, seg.phase);
    for (int gi = 0; gi < kSublevels; ++gi) {
      for (int ei = 0; ei < kSublevels; ++ei) {
        const Cx kv = block(ei, gi) * rot;
        if (kv == Cx(0.0)) continue;
        traceWithBlock += b(gi, kSublevels + ei) * kv;
        traceWithAdj += b(kSublevels + ei, gi) * std::conj(kv);
      }
    }
    const double scale = peak * step.envelope;
    const Cx dzAmp = scale * (traceWithBlock + traceWithAdj);
    const Cx iunit(0.0, 1.0);
    const Cx dzPhase = scale * seg.amplitude * (iunit * traceWithBlock - iunit * traceWithAdj);
    out.gradient[step.segment] += -2.0 * (std::conj(z) * dzAmp).real();
    out.gradient[n + step.segment] += -2.0 * (std::conj(z) * dzPhase).real();

    left = left * units[kk];
  }
  return out;
}

}  // namespace detail

inline BatchCost batch_cost(const Waveform& w, const std::vector<NoiseParams>& batch, const ControlModel& model = {},
                            int workers = 1) {
  w.validate();
  if (batch.empty()) throw std::invalid_argument("batch_cost: empty batch");
  BatchCost r;
  r.perTrajectory.resize(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i, std::size_t) {
    r.perTrajectory[i] = detail::trajectory(w, batch[i], model, false).infidelity;
  });
  for (double v : r.perTrajectory) r.cost += v;  // fixed order
  r.cost /= static_cast<double>(batch.size());
  return r;
}

inline BatchGradient batch_gradient(const Waveform& w, const std::vector<NoiseParams>& batch,
                                    const ControlModel& model = {}, int workers = 1) {
  w.validate();
  if (batch.empty()) throw std::invalid_argument("batch_gradient: empty batch");
  std::vector<detail::TrajectoryResult> results(batch.size());
  parallel_for(batch.size(), workers, [&](std::size_t i, std::size_t) {
    results[i] = detail::trajectory(w, batch[i], model, true);
  });
  BatchGradient r;
  r.gradient.assign(2 * w.size(), 0.0);
  for (const auto& t : results) {
    r.perTrajectory.push_back(t.infidelity);
    r.cost += t.infidelity;
    for (std::size_t j = 0; j < r.gradient.size(); ++j) r.gradient[j] += t.gradient[j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  r.cost *= inv;
  for (double& gj : r.gradient) gj *= inv;
  return r;
}

inline std::vector<double> gradient(const Waveform& w, const std::vector<NoiseParams>& batch,
                                    const ControlModel& model = {}, int workers = 1) {
  return batch_gradient(w, batch, model, workers).gradient;
}

struct OptimizationConfig {
  int nSegments = 32;
  double pulseDuration = 2.0e-3;  // s
  int batchSize = 50;
  double learningRate = 0.05;
  /// Learning rate decays geometrically to learningRate * finalLearningRateFraction.
  double finalLearningRateFraction = 0.02;
  int maxIterations = 500;
  std::uint64_t seed = 1;
  bool fixedBatch = false;
  int workers = 1;
  double initialAmplitude = 0.5;
  double initialPhaseJitter = 0.1;  // rad
  int convergenceWindow = 50;  // 0 disables the convergence test
  double convergenceTolerance = 1e-8;
  double minSegmentDuration = 1.0e-6;  // s

  void validate() const {
    if (nSegments < 1) throw std::invalid_argument("optimizer: n_segments must be >= 1");
    if (batchSize < 1) throw std::invalid_argument("optimizer: batch_size must be >= 1");
    if (!(pulseDuration > 0.0)) throw std::invalid_argument("optimizer: duration must be positive");
    if (pulseDuration / nSegments < minSegmentDuration)
      throw std::invalid_argument("optimizer: segment shorter than the minimum segment time");
    if (!(learningRate > 0.0)) throw std::invalid_argument("optimizer: learning rate must be positive");
    if (maxIterations < 1) throw std::invalid_argument("optimizer: max_iterations must be >= 1");
    if (!(initialAmplitude > 0.0 && initialAmplitude < 1.0))
      throw std::invalid_argument("optimizer: initial amplitude must lie in (0, 1)");
  }
};

enum class OptimizationStatus { Converged, MaxIterations };

inline const char* to_string(OptimizationStatus s) {
  return s == OptimizationStatus::Converged ? "converged" : "max_iterations";
}

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double bestCost = 0.0;
  double wallSeconds = 0.0;
};

struct OptimizationTrace {
  std::vector<IterationRecord> iterations;
  Waveform best;
  double bestCost = std::numeric_limits<double>::infinity();
  double initialCost = 0.0;
  std::vector<double> finalPerTrajectory;
  OptimizationStatus status = OptimizationStatus::MaxIterations;
};

namespace detail {

inline double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

}  // namespace detail

/**
 * Adaptive-moment gradient descent on (u_k, phi_k) with amplitude
 * sigmoid(u_k). A fresh noise batch is drawn every iteration unless
 * fixedBatch is set. The best waveform is the one with the lowest batch cost
 * seen so far.
 */
inline OptimizationTrace optimize(const OptimizationConfig& cfg, const NoiseDistribution& dist,
                                  const ControlModel& model = {}) {
  cfg.validate();
  dist.validate();
  const auto n = static_cast<std::size_t>(cfg.nSegments);
  Rng initRng = make_rng(cfg.seed, "optimizer/init");
  Rng batchRng = make_rng(cfg.seed, "optimizer/batch");

  std::vector<double> params(2 * n);
  {
    std::normal_distribution<double> jitter(0.0, cfg.initialPhaseJitter);
    const double u0 = std::log(cfg.initialAmplitude / (1.0 - cfg.initialAmplitude));
    for (std::size_t k = 0; k < n; ++k) {
      params[k] = u0;
      params[n + k] = jitter(initRng);
    }
  }
  auto toWaveform = [&](const std::vector<double>& p) {
    Waveform w;
    w.segmentDuration = cfg.pulseDuration / static_cast<double>(n);
    w.label = "optimized";
    w.segments.resize(n);
    for (std::size_t k = 0; k < n; ++k) w.segments[k] = {detail::sigmoid(p[k]), p[n + k]};
    return w;
  };

  std::vector<NoiseParams> batch = sample_batch(dist, static_cast<std::size_t>(cfg.batchSize), batchRng);
  std::vector<double> m(2 * n, 0.0), v(2 * n, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, epsilon = 1e-12;
  const auto start = std::chrono::steady_clock::now();

  OptimizationTrace trace;
  for (int it = 0; it < cfg.maxIterations; ++it) {
    if (it > 0 && !cfg.fixedBatch) batch = sample_batch(dist, static_cast<std::size_t>(cfg.batchSize), batchRng);
    const Waveform w = toWaveform(params);
    BatchGradient bg = batch_gradient(w, batch, model, cfg.workers);
    if (it == 0) trace.initialCost = bg.cost;
    if (bg.cost < trace.bestCost) {
      trace.bestCost = bg.cost;
      trace.best = w;
      trace.finalPerTrajectory = bg.perTrajectory;
    }
    trace.iterations.push_back(
        {it, bg.cost, trace.bestCost, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});

    // Batches are resampled, so compare window means instead of single costs.
    const int window = cfg.convergenceWindow;
    if (window > 0 && it + 1 >= 2 * window) {
      double previous = 0.0, recent = 0.0;
      for (int j = it + 1 - 2 * window; j <= it - window; ++j) previous += trace.iterations[j].cost;
      for (int j = it + 1 - window; j <= it; ++j) recent += trace.iterations[j].cost;
      if ((previous - recent) / window < cfg.convergenceTolerance) {
        trace.status = OptimizationStatus::Converged;
        break;
      }
    }

    // chain rule through the sigmoid amplitude map
    for (std::size_t k = 0; k < n; ++k) {
      const double a = w.segments[k].amplitude;
      bg.gradient[k] *= a * (1.0 - a);
    }
    const double progress = cfg.maxIterations > 1 ? static_cast<double>(it) / (cfg.maxIterations - 1) : 0.0;
    const double lr = cfg.learningRate * std::pow(cfg.finalLearningRateFraction, progress);
    const double c1 = 1.0 - std::pow(beta1, it + 1), c2 = 1.0 - std::pow(beta2, it + 1);
    for (std::size_t j = 0; j < params.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * bg.gradient[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * bg.gradient[j] * bg.gradient[j];
      params[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + epsilon);
    }
  }
  return trace;
}

}  // namespace srclock
