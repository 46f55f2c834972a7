/**
 * @brief 87Sr clock-transition level structure, physical constants and
 * dipole coupling ratios.
 *
 * Angular quantum numbers are carried as doubled integers (twoMF = 2 mF) so
 * that half-integer values stay exact.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace srclock {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kHbar = 1.054571817e-34;       // J s
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg

/// Number of Zeeman sublevels per manifold (F = 9/2).
inline constexpr int kSublevels = 10;
/// Total dimension of the ground + excited Hilbert space.
inline constexpr int kDim = 2 * kSublevels;
/// 2F for the F = 9/2 hyperfine manifolds.
inline constexpr int kTwoF = 9;

enum class Manifold { Ground, Excited };

/// One Zeeman sublevel of 1S0 (ground) or 3P0 (excited).
struct Level {
  Manifold manifold = Manifold::Ground;
  int twoMF = kTwoF;

  friend bool operator==(const Level&, const Level&) = default;

  double mF() const { return 0.5 * twoMF; }
};

/// Dense basis index: ground mF = -9/2..9/2 -> 0..9, then excited -> 10..19.
constexpr int dense_index(Level level) {
  if (level.twoMF < -kTwoF || level.twoMF > kTwoF || (level.twoMF + kTwoF) % 2 != 0)
    throw std::invalid_argument("invalid sublevel 2mF=" + std::to_string(level.twoMF));
  const int sub = (level.twoMF + kTwoF) / 2;
  return level.manifold == Manifold::Ground ? sub : kSublevels + sub;
}

constexpr Level level_at(int index) {
  if (index < 0 || index >= kDim)
    throw std::out_of_range("level index " + std::to_string(index));
  const Manifold m = index < kSublevels ? Manifold::Ground : Manifold::Excited;
  const int sub = index % kSublevels;
  return Level{m, 2 * sub - kTwoF};
}

/// Sublevel offset (0..9) of a doubled magnetic quantum number.
constexpr int sublevel_offset(int twoMF) { return (twoMF + kTwoF) / 2; }

inline constexpr Level kStretchedGround{Manifold::Ground, kTwoF};
inline constexpr Level kStretchedExcited{Manifold::Excited, kTwoF};
inline constexpr int kGroundStretchedIndex = dense_index(kStretchedGround);
inline constexpr int kExcitedStretchedIndex = dense_index(kStretchedExcited);

/**
 * Physical constants entering the Hamiltonian. Frequencies are angular
 * (rad/s), Zeeman slopes are rad/s per gauss.
 */
struct PhysicalConstants {
  double b0Gauss = 1.0;
  double omegaBPerGauss = kTwoPi * 491.0;
  double mu0gSPerGauss = kTwoPi * 182.0;
  double mu0gPPerGauss = kTwoPi * 291.0;
  double omegaD = kTwoPi * 100.0;
  double rabiPeak = kTwoPi * 3.0e3;
  double wavelength = 698.0e-9;
  double atomMass = 86.9088775 * kAtomicMassUnit;

  double waveNumber() const { return kTwoPi / wavelength; }
  /// hbar k / m
  double recoilVelocity() const { return kHbar * waveNumber() / atomMass; }
  /// k * (hbar k / m): Doppler shift produced by one photon momentum.
  double recoilDopplerPerHbarK() const { return waveNumber() * recoilVelocity(); }
  /// hbar k^2 / 2m: single-photon recoil shift.
  double recoilShift() const { return 0.5 * recoilDopplerPerHbarK(); }
};

struct RecoilConstants {
  double recoilVelocity = 0.0;        // m/s
  double recoilDopplerPerHbarK = 0.0;  // rad/s
};

inline RecoilConstants recoil_constants(double wavelength, double atomMass) {
  if (!(wavelength > 0.0) || !(atomMass > 0.0))
    throw std::invalid_argument("recoil_constants: wavelength and mass must be positive");
  const double k = kTwoPi / wavelength;
  const double v = kHbar * k / atomMass;
  return {v, k * v};
}

namespace detail {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

/**
 * Wigner 3-j symbol (j1 j2 j3; m1 m2 m3) from the Racah formula. All
 * arguments are doubled (2j, 2m). Returns 0 outside the selection rules.
 */
inline double wigner_3j(int tj1, int tj2, int tj3, int tm1, int tm2, int tm3) {
  if (tm1 + tm2 + tm3 != 0) return 0.0;
  if (std::abs(tm1) > tj1 || std::abs(tm2) > tj2 || std::abs(tm3) > tj3) return 0.0;
  if ((tj1 + tm1) % 2 || (tj2 + tm2) % 2 || (tj3 + tm3) % 2) return 0.0;
  if (tj3 < std::abs(tj1 - tj2) || tj3 > tj1 + tj2 || (tj1 + tj2 + tj3) % 2) return 0.0;

  using detail::factorial;
  // Integer combinations (all even when doubled) halved once here.
  const int a = (tj1 + tj2 - tj3) / 2;
  const int b = (tj1 - tj2 + tj3) / 2;
  const int c = (-tj1 + tj2 + tj3) / 2;
  const int d = (tj1 + tj2 + tj3) / 2 + 1;
  const double triangle = factorial(a) * factorial(b) * factorial(c) / factorial(d);
  const double norm = std::sqrt(triangle * factorial((tj1 + tm1) / 2) * factorial((tj1 - tm1) / 2) *
                                factorial((tj2 + tm2) / 2) * factorial((tj2 - tm2) / 2) *
                                factorial((tj3 + tm3) / 2) * factorial((tj3 - tm3) / 2));

  const int kMin = std::max({0, (tj2 - tj3 - tm1) / 2, (tj1 - tj3 + tm2) / 2});
  const int kMax = std::min({a, (tj1 - tm1) / 2, (tj2 + tm2) / 2});
  double sum = 0.0;
  for (int k = kMin; k <= kMax; ++k) {
    const double denom = factorial(k) * factorial(a - k) * factorial((tj1 - tm1) / 2 - k) *
                         factorial((tj2 + tm2) / 2 - k) * factorial((tj3 - tj2 + tm1) / 2 + k) *
                         factorial((tj3 - tj1 - tm2) / 2 + k);
    sum += ((k % 2) ? -1.0 : 1.0) / denom;
  }
  const int phaseExp = (tj1 - tj2 - tm3) / 2;
  return ((phaseExp % 2) ? -1.0 : 1.0) * norm * sum;
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> (doubled arguments).
inline double clebsch_gordan(int tj1, int tm1, int tj2, int tm2, int tJ, int tM) {
  const int phaseExp = (tj1 - tj2 + tM) / 2;
  const double sign = (phaseExp % 2) ? -1.0 : 1.0;
  return sign * std::sqrt(tJ + 1.0) * wigner_3j(tj1, tj2, tJ, tm1, tm2, -tM);
}

enum class Polarization { Pi = 0, SigmaPlus = 1, SigmaMinus = 2 };

/// Change of 2mF produced by a polarization component.
constexpr int two_q(Polarization p) {
  switch (p) {
    case Polarization::Pi: return 0;
    case Polarization::SigmaPlus: return 2;
    case Polarization::SigmaMinus: return -2;
  }
  return 0;
}

/// Unnormalized dipole angular factor for |F mF> -> |F' mF + q>, F = F' = 9/2.
inline double dipole_angular_factor(Polarization p, int twoMF) {
  const int tq = two_q(p);
  return clebsch_gordan(kTwoF, twoMF, 2, tq, kTwoF, twoMF + tq);
}

/**
 * Coupling strengths relative to the stretched pi transition, indexed
 * [polarization][ground sublevel offset]. Entries whose target sublevel does
 * not exist are zero.
 */
struct CouplingTable {
  std::array<std::array<double, kSublevels>, 3> ratio{};

  double operator()(Polarization p, int twoMF) const {
    return ratio[static_cast<int>(p)][sublevel_offset(twoMF)];
  }
};

inline CouplingTable clebsch_gordan_ratios() {
  CouplingTable table;
  const double reference = dipole_angular_factor(Polarization::Pi, kTwoF);
  for (Polarization p : {Polarization::Pi, Polarization::SigmaPlus, Polarization::SigmaMinus}) {
    for (int twoMF = -kTwoF; twoMF <= kTwoF; twoMF += 2) {
      table.ratio[static_cast<int>(p)][sublevel_offset(twoMF)] =
          dipole_angular_factor(p, twoMF) / reference;
    }
  }
  return table;
}

}  // namespace srclock
