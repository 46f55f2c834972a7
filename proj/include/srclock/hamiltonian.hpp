/**
 * @brief Rotating-frame Hamiltonian H = H_B + H_D + H_C on the 20 clock
 * sublevels.
 *
 * Units: hbar = 1, every matrix element is an angular frequency (rad/s).
 * The builders are templated on the real scalar so that test oracles can run
 * the same model in extended precision.
 */
#pragma once

#include <Eigen/Core>
#include <complex>
#include <stdexcept>

#include "srclock/atoms.hpp"

namespace srclock {

template <class Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, kDim, kDim>;
template <class Real>
using CVector = Eigen::Matrix<std::complex<Real>, kDim, 1>;
template <class Real>
using CouplingBlock = Eigen::Matrix<std::complex<Real>, kSublevels, kSublevels>;

using HamiltonianMatrix = CMatrix<double>;

/// One static noise trajectory.
struct NoiseParams {
  std::complex<double> epsPlus{};   // fractional sigma+ amplitude
  std::complex<double> epsMinus{};  // fractional sigma- amplitude
  std::complex<double> betaA0{};    // static drive amplitude/phase deviation
  double betaV = 0.0;               // Doppler detuning, units of omegaD
  double betaB = 0.0;               // fractional bias-field change

  double epsSquared() const { return std::norm(epsPlus) + std::norm(epsMinus); }

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Instantaneous drive: Rabi frequency, laser phase and propagation sign.
template <class Real = double>
struct ControlSample {
  Real rabi = 0;
  Real phase = 0;
  int direction = +1;
};

inline void validate(const NoiseParams& noise) {
  if (noise.epsSquared() > 1.0)
    throw std::domain_error("polarization error |eps+|^2 + |eps-|^2 exceeds 1");
}

/// Zeeman ladder, including the symmetric split of the bias-change detuning.
template <class Real = double>
CMatrix<Real> build_HB(Real betaB, const PhysicalConstants& c = {}) {
  CMatrix<Real> h = CMatrix<Real>::Zero();
  const Real b0 = c.b0Gauss;
  const Real split = betaB * b0 * Real(c.omegaBPerGauss) / 2;
  for (int twoMF = -kTwoF; twoMF <= kTwoF; twoMF += 2) {
    const Real ladder = Real(kTwoF - twoMF) / 2;
    const Real field = (1 + betaB) * b0;
    h(dense_index({Manifold::Ground, twoMF}), dense_index({Manifold::Ground, twoMF})) =
        -split - field * Real(c.mu0gSPerGauss) * ladder;
    h(dense_index({Manifold::Excited, twoMF}), dense_index({Manifold::Excited, twoMF})) =
        split - field * Real(c.mu0gPPerGauss) * ladder;
  }
  return h;
}

/**
 * Diagonal detuning term: ground -delta/2, excited +delta/2. Used for the
 * Doppler term (delta = direction * betaV * omegaD) and for arm-dependent
 * detunings in the interferometer.
 */
template <class Real = double>
CMatrix<Real> detuning_term(Real delta) {
  CMatrix<Real> h = CMatrix<Real>::Zero();
  for (int i = 0; i < kSublevels; ++i) {
    h(i, i) = -delta / 2;
    h(kSublevels + i, kSublevels + i) = delta / 2;
  }
  return h;
}

template <class Real = double>
CMatrix<Real> build_HD(Real betaV, int direction, const PhysicalConstants& c = {}) {
  return detuning_term<Real>(Real(direction) * betaV * Real(c.omegaD));
}

/**
 * Excited-by-ground coupling block for unit Rabi frequency and zero laser
 * phase: entry (e, m') <- (g, m) carries (1 + betaA0) C^q_m / C^pi_{9/2} times
 * sqrt(1 - eps^2), eps+ or eps- for q = pi, sigma+, sigma-, and a factor 1/2.
 */
template <class Real = double>
CouplingBlock<Real> coupling_block(const NoiseParams& noise, const CouplingTable& couplings) {
  validate(noise);
  using Cx = std::complex<Real>;
  const Cx drive = Cx(Real(1) + Real(noise.betaA0.real()), Real(noise.betaA0.imag())) / Real(2);
  const Real piAmp = std::sqrt(Real(1) - Real(noise.epsSquared()));
  const Cx plus(Real(noise.epsPlus.real()), Real(noise.epsPlus.imag()));
  const Cx minus(Real(noise.epsMinus.real()), Real(noise.epsMinus.imag()));

  CouplingBlock<Real> k = CouplingBlock<Real>::Zero();
  for (int twoMF = -kTwoF; twoMF <= kTwoF; twoMF += 2) {
    const int g = sublevel_offset(twoMF);
    k(g, g) = drive * piAmp * Real(couplings(Polarization::Pi, twoMF));
    if (twoMF + 2 <= kTwoF)
      k(g + 1, g) = drive * plus * Real(couplings(Polarization::SigmaPlus, twoMF));
    if (twoMF - 2 >= -kTwoF)
      k(g - 1, g) = drive * minus * Real(couplings(Polarization::SigmaMinus, twoMF));
  }
  return k;
}

/// Places rabi * e^{i phase} * block below the diagonal and its adjoint above.
template <class Real>
void add_drive(CMatrix<Real>& h, const CouplingBlock<Real>& block, Real rabi, Real phase) {
  const std::complex<Real> factor = std::polar(rabi, phase);
  const CouplingBlock<Real> lower = factor * block;
  h.template block<kSublevels, kSublevels>(kSublevels, 0) += lower;
  h.template block<kSublevels, kSublevels>(0, kSublevels) += lower.adjoint();
}

template <class Real = double>
CMatrix<Real> build_HC(const ControlSample<Real>& control, const NoiseParams& noise,
                       const CouplingTable& couplings) {
  CMatrix<Real> h = CMatrix<Real>::Zero();
  add_drive<Real>(h, coupling_block<Real>(noise, couplings), control.rabi, control.phase);
  return h;
}

/// Control-independent part H_B + H_D (+ an optional extra detuning).
template <class Real = double>
CMatrix<Real> drift_hamiltonian(const NoiseParams& noise, int direction, const PhysicalConstants& c,
                                Real extraDetuning = 0) {
  CMatrix<Real> h = build_HB<Real>(Real(noise.betaB), c);
  h.diagonal() += detuning_term<Real>(Real(direction) * Real(noise.betaV) * Real(c.omegaD) +
                                      extraDetuning)
                      .diagonal();
  return h;
}

template <class Real = double>
CMatrix<Real> assemble(const NoiseParams& noise, const ControlSample<Real>& control,
                       const PhysicalConstants& c, const CouplingTable& couplings,
                       Real extraDetuning = 0) {
  CMatrix<Real> h = drift_hamiltonian<Real>(noise, control.direction, c, extraDetuning);
  add_drive<Real>(h, coupling_block<Real>(noise, couplings), control.rabi, control.phase);
  return h;
}

template <class Real>
Real hermiticity_residual(const CMatrix<Real>& h) {
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace srclock
