/// Umbrella header for the srclock library.
#pragma once

#include "srclock/analysis.hpp"
#include "srclock/atoms.hpp"
#include "srclock/hamiltonian.hpp"
#include "srclock/interferometer.hpp"
#include "srclock/optimizer.hpp"
#include "srclock/propagation.hpp"
#include "srclock/pulses.hpp"
#include "srclock/time_noise.hpp"
#include "srclock/waveform_io.hpp"
