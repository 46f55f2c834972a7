#include <gtest/gtest.h>

#include <random>

#include "oracles/rabi.hpp"
#include "oracles/series_expm.hpp"
#include "srclock/propagation.hpp"

namespace srclock {
namespace {

using Cx = std::complex<double>;
const PhysicalConstants kConst;

HamiltonianMatrix random_hermitian(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  HamiltonianMatrix a;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) a(i, j) = Cx(g(rng), g(rng));
  return 0.5 * (a + a.adjoint());
}

double unitarity_residual(const UnitaryMatrix& u) {
  return (u.adjoint() * u - UnitaryMatrix::Identity()).cwiseAbs().maxCoeff();
}

NoiseParams random_noise(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return {{0.05 * g(rng), 0.05 * g(rng)}, {0.05 * g(rng), 0.05 * g(rng)}, {0.02 * g(rng), 0.02 * g(rng)}, g(rng),
          0.1 * g(rng)};
}

SampledWaveform random_samples(std::mt19937_64& rng, std::size_t n, double dt) {
  std::uniform_real_distribution<double> amp(0.0, 1.0), ph(-3.0, 3.0);
  SampledWaveform sw;
  sw.stepDuration = dt;
  for (std::size_t i = 0; i < n; ++i) sw.samples.push_back({amp(rng) * kConst.rabiPeak, ph(rng)});
  return sw;
}

TEST(StepPropagator, ZeroHamiltonianIsIdentity) {
  EXPECT_TRUE(step_propagator(HamiltonianMatrix::Zero(), 1e-3).isApprox(UnitaryMatrix::Identity(), 1e-15));
}

TEST(StepPropagator, ResonantPiSwapsStretchedPair) {
  const auto h = assemble<double>({}, {kConst.rabiPeak, 0.0, +1}, kConst, clebsch_gordan_ratios());
  const auto u = step_propagator(h, std::numbers::pi / kConst.rabiPeak);
  EXPECT_NEAR(std::norm(u(kExcitedStretchedIndex, kGroundStretchedIndex)), 1.0, 1e-13);
  EXPECT_NEAR(std::abs(u(kExcitedStretchedIndex, kGroundStretchedIndex) - Cx(0, -1)), 0.0, 1e-12);
}

TEST(StepPropagator, RandomHermitianIsUnitaryAndMatchesSeries) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_hermitian(rng, 1e4);
    const double dt = 1e-4;
    const auto u = step_propagator(h, dt);
    EXPECT_LE(unitarity_residual(u), 1e-12);
    const UnitaryMatrix ref = oracle::expm_series<UnitaryMatrix>(Cx(0, -dt) * h);
    EXPECT_LE((u - ref).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(StepPropagator, RejectsNonHermitianAndBadStep) {
  HamiltonianMatrix h = HamiltonianMatrix::Zero();
  h(0, 1) = 1.0;
  EXPECT_THROW(step_propagator(h, 1e-6), std::domain_error);
  EXPECT_THROW(step_propagator(HamiltonianMatrix::Zero(), 0.0), std::invalid_argument);
}

TEST(Evolve, NoDriveKeepsStretchedStateFixed) {
  SampledWaveform sw{std::vector<Sample>(5, {0.0, 0.0}), 1e-5};
  const auto r = evolve(sw, {}, basis_state(kStretchedGround));
  EXPECT_LE((r.psi - basis_state(kStretchedGround)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Evolve, PrimitivePiMatchesRabiFormula) {
  const auto sw = sample_exact(primitive_pi(kConst.rabiPeak), 1.0);
  for (double betaV : {0.0, 1.0, 3.0, 10.0}) {
    EvolutionContext ctx;
    ctx.noise.betaV = betaV;
    const double delta = betaV * kConst.omegaD;
    const double expected = oracle::rabi_transfer(kConst.rabiPeak, delta, sw.duration());
    EXPECT_NEAR(stretched_transfer(evolve_unitary(sw, ctx)), expected, 1e-12) << "betaV=" << betaV;
  }
}

TEST(Evolve, FrozenRabiValues) {
  // Omega = 2 pi 3 kHz, t = pi / Omega, delta = 2 pi {100, 300, 1000} Hz
  const auto sw = sample_exact(primitive_pi(kConst.rabiPeak), 1.0);
  const double expected[] = {0.9988893618107513, 0.9900382403357729, 0.8935179581788403};
  const double betaV[] = {1.0, 3.0, 10.0};
  for (int i = 0; i < 3; ++i) {
    EvolutionContext ctx;
    ctx.noise.betaV = betaV[i];
    EXPECT_NEAR(stretched_transfer(evolve_unitary(sw, ctx)), expected[i], 1e-12);
  }
}

TEST(Evolve, ExtraDetuningActsLikeDoppler) {
  const auto sw = sample_exact(primitive_pi(kConst.rabiPeak), 1.0);
  EvolutionContext a, b;
  a.noise.betaV = 2.0;
  b.extraDetuning = 2.0 * kConst.omegaD;
  EXPECT_LE((evolve_unitary(sw, a) - evolve_unitary(sw, b)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evolve, MatchesSeriesOracleOnShortWaveforms) {
  std::mt19937_64 rng(2);
  const CouplingTable cg = clebsch_gordan_ratios();
  for (int trial = 0; trial < 10; ++trial) {
    const auto sw = random_samples(rng, 1 + trial % 4, 3e-5);
    EvolutionContext ctx;
    ctx.noise = random_noise(rng);
    ctx.direction = trial % 2 ? -1 : 1;
    UnitaryMatrix ref = UnitaryMatrix::Identity();
    for (const auto& s : sw.samples) {
      const auto h = assemble<double>(ctx.noise, {s.rabi, s.phase, ctx.direction}, kConst, cg);
      ref = (oracle::expm_series<UnitaryMatrix>(Cx(0, -sw.stepDuration) * h) * ref).eval();
    }
    EXPECT_LE((evolve_unitary(sw, ctx) - ref).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Evolve, NormAndUnitarityConserved) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sw = random_samples(rng, 200, 5e-6);
    EvolutionContext ctx;
    ctx.noise = random_noise(rng);
    StateVector psi0 = StateVector::Random().normalized();
    const auto r = evolve(sw, ctx, psi0);
    EXPECT_LE(unitarity_residual(r.unitary), 1e-10);
    EXPECT_NEAR(r.psi.norm(), 1.0, 1e-10);
    EXPECT_LE((evolve_state(sw, ctx, psi0) - r.psi).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Evolve, CompositionOfWaveforms) {
  std::mt19937_64 rng(4);
  const auto a = random_samples(rng, 30, 4e-6);
  const auto b = random_samples(rng, 17, 4e-6);
  SampledWaveform ab = a;
  ab.samples.insert(ab.samples.end(), b.samples.begin(), b.samples.end());
  EvolutionContext ctx;
  ctx.noise = random_noise(rng);
  const UnitaryMatrix prod = evolve_unitary(b, ctx) * evolve_unitary(a, ctx);
  EXPECT_LE((evolve_unitary(ab, ctx) - prod).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evolve, NoLeakageWithoutPolarizationError) {
  std::mt19937_64 rng(5);
  const auto sw = random_samples(rng, 100, 5e-6);
  EvolutionContext ctx;
  ctx.noise = random_noise(rng);
  ctx.noise.epsPlus = ctx.noise.epsMinus = 0.0;
  const auto psi = evolve_state(sw, ctx, basis_state(kStretchedGround));
  const double inside = std::norm(psi(kGroundStretchedIndex)) + std::norm(psi(kExcitedStretchedIndex));
  EXPECT_NEAR(inside, 1.0, 1e-13);
}

TEST(Infidelity, Examples) {
  TargetOperation target;
  UnitaryMatrix u = UnitaryMatrix::Identity();
  EXPECT_NEAR(infidelity(u, target), 1.0, 1e-15);
  u(kGroundStretchedIndex, kGroundStretchedIndex) = 0.0;
  u(kExcitedStretchedIndex, kExcitedStretchedIndex) = 0.0;
  u(kExcitedStretchedIndex, kGroundStretchedIndex) = Cx(0, -1);
  u(kGroundStretchedIndex, kExcitedStretchedIndex) = Cx(0, -1);
  EXPECT_NEAR(infidelity(u, target), 0.0, 1e-15);
  EXPECT_NEAR(infidelity(std::polar(1.0, 0.73) * u, target), 0.0, 1e-15);
  EXPECT_NEAR(infidelity(step_propagator(
                             assemble<double>({}, {kConst.rabiPeak, 0.0, +1}, kConst, clebsch_gordan_ratios()),
                             std::numbers::pi / kConst.rabiPeak),
                         target),
              0.0, 1e-12);
}

TEST(Infidelity, LeakageCountsAgainstFidelity) {
  UnitaryMatrix u = UnitaryMatrix::Zero();
  u(kExcitedStretchedIndex, kGroundStretchedIndex) = Cx(0, -1);
  u(kGroundStretchedIndex, 0) = 1.0;  // the excited stretched column leaked elsewhere
  EXPECT_NEAR(infidelity(u), 0.75, 1e-15);
}

TEST(PhaseDeviation, Examples) {
  StateVector a = StateVector::Random().normalized();
  EXPECT_EQ(phase_deviation(a, a, kStretchedExcited), 0.0);
  for (double theta : {-3.0, -0.5, 0.0, 1e-3, 2.0, std::numbers::pi})
    EXPECT_NEAR(phase_deviation(std::polar(1.0, theta) * a, a, kStretchedExcited), theta, 1e-12);
  StateVector z = StateVector::Zero();
  z(0) = 1.0;
  EXPECT_THROW(phase_deviation(z, a, kStretchedExcited), std::domain_error);
}

TEST(WrapPhase, Range) {
  EXPECT_EQ(wrap_phase(std::numbers::pi), std::numbers::pi);
  EXPECT_NEAR(wrap_phase(-std::numbers::pi), std::numbers::pi, 1e-15);
  EXPECT_NEAR(wrap_phase(7.0), 7.0 - kTwoPi, 1e-15);
}

TEST(Composite, SubspaceOperations) {
  Matrix2c piY;
  piY << 0.0, -1.0, 1.0, 0.0;  // -i sigma_y
  for (auto kind : {CompositeKind::Waltz, CompositeKind::Corpse, CompositeKind::Scrofulous}) {
    const auto u = evolve_unitary(sample_exact(composite(kind), 1.0), {});
    EXPECT_NEAR(infidelity(u), 0.0, 1e-12) << composite_name(kind);
  }
  TargetOperation y;
  y.target = piY;
  const auto u = evolve_unitary(sample_exact(composite(CompositeKind::NinetyX180Y90X), 1.0), {});
  EXPECT_NEAR(infidelity(u, y), 0.0, 1e-12);
  EXPECT_NEAR(infidelity(u), 1.0, 1e-12);
}

}  // namespace
}  // namespace srclock
