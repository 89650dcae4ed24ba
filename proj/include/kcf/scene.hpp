#pragma once

#include <iostream>

#include "kcf/common.hpp"
#include "kcf/grid.hpp"
#include "kcf/kernel.hpp"
#include "kcf/waveform.hpp"

namespace kcf {

/// Point target. Delay is two-way fast time within the per-pulse listening
/// window; amplitude is the complex reflectivity entry of x_T.
struct Target {
    double delay;    // s
    double velocity; // m/s
    cplx amplitude;
};

/// Ground truth for one simulated instance.
struct Scene {
    cvec clutter_coeffs; // J*K, k-major; empty means no clutter
    std::vector<Target> targets;
    double noise_variance = 0.0; // per complex sample
    std::uint64_t rng_seed = 1;  // noise stream seed
};

/// Received-signal models. per_pulse holds the Doppler phase constant inside
/// each pulse (phase sampled at the pulse start); full advances it per sample.
enum class SignalModel { per_pulse, full };

inline cvec draw_clutter_gaussian(const ClutterKernel& kernel, Rng& rng) {
    cvec x(kernel.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = rng.circular_gaussian(kernel.variances[i]);
    return x;
}

/// Power exponential with mean = kernel variance, phase uniform on [-pi, pi).
inline cvec draw_clutter_exponential(const ClutterKernel& kernel, Rng& rng) {
    cvec x(kernel.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double power = rng.exponential(kernel.variances[i]);
        const double phase = M_PI * (2.0 * rng.uniform() - 1.0);
        x[i] = std::polar(std::sqrt(power), phase);
    }
    return x;
}

namespace detail {

inline void check_grid_matches_train(const RangeDopplerGrid& grid, const PulseTrain& train) {
    require(grid.n_delays() == train.n_range_bins(),
            "synthesize: grid delay count must equal the train's range-bin count");
    require(std::abs(grid.delay_step() * train.sample_rate - 1.0) < 1e-9,
            "synthesize: grid delay step must equal the sampling interval");
}

/// Add one scatterer echo to every pulse block. Sample n of the echo in pulse
/// m carries phase 2 pi f_c (2v/c) (T_s,m + n/f_s); the delay-dependent
/// constant phase is absorbed into the amplitude, which keeps the pulse-to-
/// pulse progression exact while the per_pulse model freezes the n/f_s term.
inline void add_scatterer(cvec& y, const PulseTrain& train, int delay_bin, double velocity,
                          cplx amplitude, SignalModel model) {
    const int L = train.block_len;
    const double dopp = 2.0 * velocity / speed_of_light * train.carrier_freq;
    for (int m = 0; m < train.n_pulses(); ++m) {
        const cvec& s = train.pulses[static_cast<std::size_t>(m)].samples;
        const cplx pulse_phase = doppler_phase(train.start_time(m), velocity, train.carrier_freq);
        cplx* block = y.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(L);
        if (model == SignalModel::per_pulse) {
            const cplx g = amplitude * pulse_phase;
            for (std::size_t n = 0; n < s.size(); ++n)
                block[static_cast<std::size_t>(delay_bin) + n] += g * s[n];
        } else {
            for (std::size_t n = 0; n < s.size(); ++n) {
                const cplx intra =
                    std::polar(1.0, 2.0 * M_PI * dopp * static_cast<double>(n) / train.sample_rate);
                block[static_cast<std::size_t>(delay_bin) + n] +=
                    amplitude * pulse_phase * intra * s[n];
            }
        }
    }
}

} // namespace detail

/// Noiseless received signal of the clutter coefficients alone.
inline cvec synthesize_clutter(const PulseTrain& train, const RangeDopplerGrid& grid,
                               const cvec& coeffs, SignalModel model) {
    detail::check_grid_matches_train(grid, train);
    require(coeffs.size() == grid.size(), "synthesize: coefficient vector length mismatch");
    const int J = grid.n_delays();
    const int K = grid.n_velocities();
    cvec y(static_cast<std::size_t>(train.n_pulses()) * static_cast<std::size_t>(train.block_len));
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < J; ++j) {
            const cplx a = coeffs[grid.flat_index(j, k)];
            if (a == cplx{0.0, 0.0}) continue;
            detail::add_scatterer(y, train, j, grid.velocity(k), a, model);
        }
    return y;
}

/// Full scene synthesis: targets + clutter + circular Gaussian noise.
/// Output is the concatenation of the M filtered blocks, M*L samples.
inline cvec synthesize_received(const PulseTrain& train, const RangeDopplerGrid& grid,
                                const Scene& scene, SignalModel model) {
    detail::check_grid_matches_train(grid, train);
    require(scene.noise_variance >= 0.0, "synthesize: negative noise variance");
    const int J = grid.n_delays();

    cvec y;
    if (scene.clutter_coeffs.empty()) {
        y.assign(static_cast<std::size_t>(train.n_pulses()) *
                     static_cast<std::size_t>(train.block_len),
                 cplx{0.0, 0.0});
    } else {
        y = synthesize_clutter(train, grid, scene.clutter_coeffs, model);
    }

    for (const auto& t : scene.targets) {
        const auto bin = static_cast<int>(std::llround(t.delay * train.sample_rate));
        require(bin >= 0 && bin < J,
                "synthesize: target delay " + std::to_string(t.delay) +
                    " s falls outside the listening window");
        double velocity = t.velocity;
        if (model == SignalModel::per_pulse) {
            // grid model: snap the target onto the nearest dictionary cell
            int best = 0;
            for (int k = 1; k < grid.n_velocities(); ++k)
                if (std::abs(t.velocity - grid.velocity(k)) <
                    std::abs(t.velocity - grid.velocity(best)))
                    best = k;
            velocity = grid.velocity(best);
            const double moved_tau = std::abs(t.delay - grid.delay(bin));
            const double moved_v = std::abs(t.velocity - velocity);
            if (moved_tau > 1e-12 || moved_v > 1e-9)
                std::cerr << "warning: target snapped to grid cell (" << grid.delay(bin) << " s, "
                          << velocity << " m/s)\n";
        }
        detail::add_scatterer(y, train, bin, velocity, t.amplitude, model);
    }

    if (scene.noise_variance > 0.0) {
        Rng rng(scene.rng_seed);
        for (auto& z : y) z += rng.circular_gaussian(scene.noise_variance);
    }
    return y;
}

/// Noise power for a target SNR, with SNR defined as mean per-sample power of
/// the noiseless received signal over the noise variance.
inline double noise_variance_for_snr(const cvec& noiseless, double snr_db) {
    require(!noiseless.empty(), "noise_variance_for_snr: empty signal");
    double power = 0.0;
    for (const auto& z : noiseless) power += std::norm(z);
    power /= static_cast<double>(noiseless.size());
    require(power > 0.0, "noise_variance_for_snr: zero signal");
    return power / std::pow(10.0, snr_db / 10.0);
}

inline double noise_variance_for_snr(const PulseTrain& train, const RangeDopplerGrid& grid,
                                     const Scene& scene, SignalModel model, double snr_db) {
    Scene quiet = scene;
    quiet.noise_variance = 0.0;
    return noise_variance_for_snr(synthesize_received(train, grid, quiet, model), snr_db);
}

} // namespace kcf
