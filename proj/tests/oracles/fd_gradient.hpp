// Finite-difference gradient of the batch cost, evaluated in long double with
// Taylor-series exponentials. Shares only the Hamiltonian builders with the
// library, not the eigen-derivative code under test.
#pragma once

#include <complex>
#include <vector>

#include "oracles/series_expm.hpp"
#include "srclock/hamiltonian.hpp"
#include "srclock/propagation.hpp"
#include "srclock/pulses.hpp"

namespace oracle {

using LReal = long double;
using LMatrix = srclock::CMatrix<LReal>;

inline LMatrix segment_unitary(const srclock::NoiseParams& noise, LReal rabi, LReal phase, LReal dt,
                               const srclock::PhysicalConstants& c, const srclock::CouplingTable& cg,
                               int direction) {
  const LMatrix h = srclock::assemble<LReal>(noise, {rabi, phase, direction}, c, cg);
  return expm_series<LMatrix>(std::complex<LReal>(0, -dt) * h, 30);
}

inline LReal subspace_infidelity(const LMatrix& u, const srclock::TargetOperation& target) {
  std::complex<LReal> overlap = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const std::complex<LReal> t(target.target(a, b).real(), target.target(a, b).imag());
      overlap += std::conj(t) * u(srclock::dense_index(target.subspace[a]), srclock::dense_index(target.subspace[b]));
    }
  LReal tt = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) tt += std::norm(std::complex<LReal>(target.target(a, b)));
  return 1 - std::norm(overlap / tt);
}

/// d cost / d c by central differences with step h; c = [amplitudes, phases].
inline std::vector<double> fd_gradient(const srclock::Waveform& w, const std::vector<srclock::NoiseParams>& batch,
                                       const srclock::PhysicalConstants& c, const srclock::TargetOperation& target,
                                       int direction = +1, LReal h = 1e-6L) {
  const srclock::CouplingTable cg = srclock::clebsch_gordan_ratios();
  const std::size_t n = w.size();
  const LReal dt = w.segmentDuration, peak = c.rabiPeak;
  std::vector<LReal> grad(2 * n, 0);
  for (const auto& noise : batch) {
    std::vector<LMatrix> seg(n), prefix(n + 1), suffix(n + 1);
    for (std::size_t k = 0; k < n; ++k)
      seg[k] = segment_unitary(noise, peak * w.segments[k].amplitude, w.segments[k].phase, dt, c, cg, direction);
    prefix[0] = LMatrix::Identity();  // U_k ... U_1
    for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = seg[k] * prefix[k];
    suffix[n] = LMatrix::Identity();  // U_N ... U_{k+1}
    for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] * seg[k];
    for (std::size_t k = 0; k < n; ++k) {
      for (int which = 0; which < 2; ++which) {
        LReal vals[2];
        for (int s = 0; s < 2; ++s) {
          LReal amp = w.segments[k].amplitude, ph = w.segments[k].phase;
          (which == 0 ? amp : ph) += (s == 0 ? h : -h);
          const LMatrix u = suffix[k + 1] * segment_unitary(noise, peak * amp, ph, dt, c, cg, direction) * prefix[k];
          vals[s] = subspace_infidelity(u, target);
        }
        grad[which * n + k] += (vals[0] - vals[1]) / (2 * h);
      }
    }
  }
  std::vector<double> out(2 * n);
  for (std::size_t j = 0; j < 2 * n; ++j) out[j] = static_cast<double>(grad[j] / static_cast<LReal>(batch.size()));
  return out;
}

}  // namespace oracle
