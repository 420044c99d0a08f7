#include "aescope/analysis/sho_fit.hpp"

#include "aescope/core/error.hpp"
#include "aescope/instrument/instrument.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace aescope::analysis {

namespace {

using instrument::sho_amplitude;

bool admissible(const SHOParams& p) {
    return p.a0 > 0.0 && p.f0_hz > 0.0 && p.q_factor > 1.0 && std::isfinite(p.a0) && std::isfinite(p.f0_hz) &&
           std::isfinite(p.q_factor);
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), at) - x.begin());
    const std::size_t lo = hi - 1;
    const double t = (at - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
}

// Frequency where the amplitude falls to `level`, walking from the peak in
// direction `step`; negative when the band edge is reached first.
double half_level_crossing(const BESpectrum& s, std::size_t peak, double level, int step) {
    auto i = static_cast<std::ptrdiff_t>(peak);
    const auto n = static_cast<std::ptrdiff_t>(s.size());
    while (true) {
        const std::ptrdiff_t next = i + step;
        if (next < 0 || next >= n) return -1.0;
        const auto a = static_cast<std::size_t>(i);
        const auto b = static_cast<std::size_t>(next);
        if (s.amplitude[b] < level) {
            const double t = (s.amplitude[a] - level) / (s.amplitude[a] - s.amplitude[b]);
            return s.frequency_hz[a] + t * (s.frequency_hz[b] - s.frequency_hz[a]);
        }
        i = next;
    }
}

struct Residuals {
    Eigen::VectorXd r;
    double cost = 0.0;
};

// The model is homogeneous in frequency, so the fit runs on f / scale with
// f0 / scale to keep the normal equations well conditioned.
Residuals residuals(const std::vector<double>& f, const std::vector<double>& y, const SHOParams& p) {
    Residuals out;
    out.r.resize(static_cast<Eigen::Index>(f.size()));
    for (std::size_t i = 0; i < f.size(); ++i) {
        out.r[static_cast<Eigen::Index>(i)] = y[i] - sho_amplitude(f[i], p);
    }
    out.cost = out.r.squaredNorm();
    return out;
}

}  // namespace

std::array<double, 3> sho_amplitude_gradient(double f_hz, const SHOParams& p) {
    const double f0 = p.f0_hz;
    const double q = p.q_factor;
    const double u = f0 * f0 - f_hz * f_hz;
    const double w = f0 * f_hz / q;
    const double d = std::sqrt(u * u + w * w);
    const double d_f0 = (2.0 * f0 * u + w * f_hz / q) / d;
    const double d_q = -(w * w) / (q * d);
    return {
        f0 * f0 / d,
        p.a0 * (2.0 * f0 / d - f0 * f0 * d_f0 / (d * d)),
        -p.a0 * f0 * f0 * d_q / (d * d),
    };
}

SHOParams sho_initial_guess(const BESpectrum& s) {
    const auto peak_it = std::max_element(s.amplitude.begin(), s.amplitude.end());
    const auto peak = static_cast<std::size_t>(peak_it - s.amplitude.begin());
    const double peak_amp = *peak_it;
    const double f_peak = s.frequency_hz[peak];

    const double level = peak_amp / 2.0;
    const double left = half_level_crossing(s, peak, level, -1);
    const double right = half_level_crossing(s, peak, level, +1);
    double fwhm = s.frequency_hz.back() - s.frequency_hz.front();
    if (left > 0.0 && right > 0.0) fwhm = right - left;
    else if (left > 0.0) fwhm = 2.0 * (f_peak - left);
    else if (right > 0.0) fwhm = 2.0 * (right - f_peak);

    // The half-amplitude width of an SHO is sqrt(3)·f0/Q.
    SHOParams init;
    init.q_factor = std::max(std::sqrt(3.0) * f_peak / std::max(fwhm, 1e-12), 1.5);
    init.f0_hz = f_peak;
    init.a0 = peak_amp / init.q_factor;
    return init;
}

ShoFit fit_sho(const BESpectrum& s, const ShoFitOptions& options) {
    if (s.size() < 8 || s.amplitude.size() != s.size() || s.phase_rad.size() != s.size()) {
        throw Error(ErrorCode::invalid_params, "SHO fit needs >= 8 bins with matching arrays");
    }
    const auto [mn, mx] = std::minmax_element(s.amplitude.begin(), s.amplitude.end());
    if (!(*mx > 0.0) || *mx - *mn <= 1e-9 * *mx) {
        throw Error(ErrorCode::no_peak, "spectrum has no resonance peak");
    }

    const double scale = 0.5 * (s.frequency_hz.front() + s.frequency_hz.back());
    std::vector<double> f(s.size());
    std::transform(s.frequency_hz.begin(), s.frequency_hz.end(), f.begin(), [&](double v) { return v / scale; });

    SHOParams p = sho_initial_guess(s);
    p.f0_hz /= scale;
    Residuals res = residuals(f, s.amplitude, p);

    const auto n = static_cast<Eigen::Index>(f.size());
    Eigen::MatrixXd jac(n, 3);
    double lambda = 1e-3;
    ShoFit fit;
    int iter = 0;
    bool refresh = true;
    for (; iter < options.max_iterations; ++iter) {
        if (refresh) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto g = sho_amplitude_gradient(f[static_cast<std::size_t>(i)], p);
                jac.row(i) << g[0], g[1], g[2];
            }
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * res.r;
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const Eigen::Vector3d delta = damped.ldlt().solve(jtr);

        SHOParams trial = p;
        trial.a0 += delta[0];
        trial.f0_hz += delta[1];
        trial.q_factor += delta[2];
        const double rel = std::max({std::abs(delta[0] / p.a0), std::abs(delta[1] / p.f0_hz),
                                     std::abs(delta[2] / p.q_factor)});
        if (!delta.allFinite()) break;

        if (admissible(trial)) {
            Residuals trial_res = residuals(f, s.amplitude, trial);
            if (trial_res.cost <= res.cost) {
                p = trial;
                res = std::move(trial_res);
                lambda = std::max(lambda / 10.0, 1e-12);
                refresh = true;
                if (rel < options.relative_tolerance) {
                    fit.converged = true;
                    ++iter;
                    break;
                }
                continue;
            }
        }
        // A rejected step this small means we are sitting on the minimum.
        if (rel < options.relative_tolerance) {
            fit.converged = true;
            ++iter;
            break;
        }
        lambda *= 10.0;
        refresh = false;
        if (lambda > 1e16) break;
    }

    p.f0_hz *= scale;
    const double phase = interpolate(s.frequency_hz, s.phase_rad, p.f0_hz);
    p.phase_offset_rad = std::atan2(std::sin(phase), std::cos(phase));
    fit.params = p;
    fit.iterations = iter;
    fit.residual_rms = std::sqrt(res.cost / static_cast<double>(f.size()));
    return fit;
}

}  // namespace aescope::analysis
