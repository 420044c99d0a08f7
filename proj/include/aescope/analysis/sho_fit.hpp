#pragma once

#include "aescope/core/types.hpp"

#include <array>

namespace aescope::analysis {

struct ShoFitOptions {
    int max_iterations = 200;
    double relative_tolerance = 1e-8;
};

struct ShoFit {
    SHOParams params;        // phase_offset_rad holds the measured phase at the fitted f0
    double residual_rms = 0.0;
    bool converged = false;  // false: best-so-far after max_iterations or a stalled search
    int iterations = 0;
};

/// Partial derivatives of the SHO amplitude with respect to (a0, f0_hz, q_factor).
std::array<double, 3> sho_amplitude_gradient(double f_hz, const SHOParams& p);

/// Starting point: f0 at the amplitude peak, Q from the half-amplitude width, a0 = peak/Q.
SHOParams sho_initial_guess(const BESpectrum& s);

/// Damped least-squares fit of the SHO amplitude model over (a0, f0, Q).
/// Throws Error(no_peak) for flat or all-zero spectra and Error(invalid_params)
/// for fewer than 8 bins or mismatched arrays.
ShoFit fit_sho(const BESpectrum& s, const ShoFitOptions& options = {});

}  // namespace aescope::analysis
