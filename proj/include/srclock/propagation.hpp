/**
 * @brief Piecewise-constant unitary evolution, gate infidelity on the
 * stretched two-level subspace, and phase deviation.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "srclock/hamiltonian.hpp"
#include "srclock/pulses.hpp"

namespace srclock {

using UnitaryMatrix = CMatrix<double>;
using StateVector = CVector<double>;
using Matrix2c = Eigen::Matrix2cd;

inline StateVector basis_state(Level level) {
  StateVector psi = StateVector::Zero();
  psi(dense_index(level)) = 1.0;
  return psi;
}

/// Target operation on an ordered pair of sublevels.
struct TargetOperation {
  std::array<Level, 2> subspace{kStretchedGround, kStretchedExcited};
  Matrix2c target = pi_rotation();

  /// |g> -> -i|e>, |e> -> -i|g>: the resonant square pi pulse.
  static Matrix2c pi_rotation() {
    Matrix2c t;
    t << 0.0, std::complex<double>(0, -1), std::complex<double>(0, -1), 0.0;
    return t;
  }
};

/// Block of U on the target subspace, rows/columns in subspace order.
inline Matrix2c restrict_to(const UnitaryMatrix& u, const TargetOperation& target) {
  Matrix2c block;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      block(a, b) = u(dense_index(target.subspace[a]), dense_index(target.subspace[b]));
  return block;
}

/// 1 - |Tr(T^dag U_sub) / Tr(T^dag T)|^2, clipped to [0, 1].
inline double infidelity(const UnitaryMatrix& u, const TargetOperation& target = {}) {
  const Matrix2c block = restrict_to(u, target);
  const std::complex<double> overlap =
      (target.target.adjoint() * block).trace() / (target.target.adjoint() * target.target).trace();
  return std::clamp(1.0 - std::norm(overlap), 0.0, 1.0);
}

inline double wrap_phase(double x) {
  double r = std::remainder(x, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

/// arg(psiF[level]) - arg(psiIdeal[level]) wrapped to (-pi, pi].
inline double phase_deviation(const StateVector& psiF, const StateVector& psiIdeal, Level level) {
  const int i = dense_index(level);
  if (std::abs(psiF(i)) < 1e-6 || std::abs(psiIdeal(i)) < 1e-6)
    throw std::domain_error("phase_deviation: amplitude too small for a defined phase");
  return wrap_phase(std::arg(psiF(i)) - std::arg(psiIdeal(i)));
}

/**
 * Reusable eigensolver workspace. One instance per worker thread; instances
 * must not be shared between concurrent evolutions.
 */
class StepPropagator {
 public:
  /// Diagonalizes h; afterwards apply()/unitary() use exp(-i h dt).
  void set(const HamiltonianMatrix& h, double dt) {
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if (hermiticity_residual(h) > 1e-12 * scale) throw std::domain_error("step_propagator: Hamiltonian is not Hermitian");
    if (!(dt > 0.0)) throw std::invalid_argument("step_propagator: dt must be positive");
    solver_.compute(h, Eigen::ComputeEigenvectors);
    if (solver_.info() != Eigen::Success) throw std::runtime_error("step_propagator: eigendecomposition failed");
    for (int k = 0; k < kDim; ++k) phases_(k) = std::polar(1.0, -solver_.eigenvalues()(k) * dt);
    haveUnitary_ = false;
  }

  const CMatrix<double>& eigenvectors() const { return solver_.eigenvectors(); }
  const Eigen::Matrix<double, kDim, 1>& eigenvalues() const { return solver_.eigenvalues(); }

  const UnitaryMatrix& unitary() const {
    if (!haveUnitary_) {
      const auto& v = solver_.eigenvectors();
      unitary_.noalias() = v * phases_.asDiagonal() * v.adjoint();
      haveUnitary_ = true;
    }
    return unitary_;
  }

  void apply(StateVector& psi) const {
    const auto& v = solver_.eigenvectors();
    tmp_.noalias() = v.adjoint() * psi;
    tmp_ = phases_.cwiseProduct(tmp_);
    psi.noalias() = v * tmp_;
  }

 private:
  Eigen::SelfAdjointEigenSolver<CMatrix<double>> solver_;
  CVector<double> phases_;
  mutable CVector<double> tmp_;
  mutable UnitaryMatrix unitary_;
  mutable bool haveUnitary_ = false;
};

/// exp(-i H dt) by Hermitian eigendecomposition.
inline UnitaryMatrix step_propagator(const HamiltonianMatrix& h, double dt) {
  StepPropagator p;
  p.set(h, dt);
  return p.unitary();
}

/// Everything fixed for one evolution apart from the waveform samples.
struct EvolutionContext {
  NoiseParams noise;
  int direction = +1;
  double extraDetuning = 0.0;  // rad/s, added to the excited-ground splitting
  PhysicalConstants constants;
  CouplingTable couplings = clebsch_gordan_ratios();
};

struct EvolutionResult {
  StateVector psi;
  UnitaryMatrix unitary;
};

namespace detail {

/// Calls step(propagator) once per sample, re-diagonalizing only when the drive changes.
template <class Step>
void for_each_step(const SampledWaveform& sw, const EvolutionContext& ctx, StepPropagator& prop, Step&& step) {
  validate(ctx.noise);
  const HamiltonianMatrix drift = drift_hamiltonian<double>(ctx.noise, ctx.direction, ctx.constants, ctx.extraDetuning);
  const CouplingBlock<double> block = coupling_block<double>(ctx.noise, ctx.couplings);
  bool have = false;
  Sample last{};
  for (const auto& s : sw.samples) {
    if (!have || s.rabi != last.rabi || s.phase != last.phase) {
      HamiltonianMatrix h = drift;
      add_drive<double>(h, block, s.rabi, s.phase);
      prop.set(h, sw.stepDuration);
      last = s;
      have = true;
    }
    step(prop);
  }
}

}  // namespace detail

/// Ordered product of step propagators applied to psi0; also returns the accumulated unitary.
inline EvolutionResult evolve(const SampledWaveform& sw, const EvolutionContext& ctx, const StateVector& psi0) {
  StepPropagator prop;
  EvolutionResult r{psi0, UnitaryMatrix::Identity()};
  UnitaryMatrix tmp;
  detail::for_each_step(sw, ctx, prop, [&](const StepPropagator& p) {
    tmp.noalias() = p.unitary() * r.unitary;
    r.unitary = tmp;
  });
  r.psi = r.unitary * psi0;
  return r;
}

inline UnitaryMatrix evolve_unitary(const SampledWaveform& sw, const EvolutionContext& ctx) {
  return evolve(sw, ctx, basis_state(kStretchedGround)).unitary;
}

/// State-only evolution; cheaper than evolve() when the unitary is not needed.
inline StateVector evolve_state(const SampledWaveform& sw, const EvolutionContext& ctx, StateVector psi,
                                StepPropagator& prop) {
  detail::for_each_step(sw, ctx, prop, [&](const StepPropagator& p) { p.apply(psi); });
  return psi;
}

inline StateVector evolve_state(const SampledWaveform& sw, const EvolutionContext& ctx, const StateVector& psi) {
  StepPropagator prop;
  return evolve_state(sw, ctx, psi, prop);
}

/// Population left in the intended subspace state after evolving |g,9/2>.
inline double stretched_transfer(const UnitaryMatrix& u) {
  return std::norm(u(kExcitedStretchedIndex, kGroundStretchedIndex));
}

}  // namespace srclock
