#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>

#include "kcf/common.hpp"

namespace kcf {

/// One transmitted pulse. Start times are kept as exact sample indices so the
/// grid-alignment invariant survives floating point round trips.
struct Pulse {
    cvec samples;              // complex baseband, length round(f_s * tau_p)
    std::int64_t start_sample; // round(f_s * T_s)
};

/// A coherent train of M pulses on a shared sampling grid. Immutable after
/// assembly; all invariants are validated by assemble_train.
struct PulseTrain {
    std::vector<Pulse> pulses;
    double sample_rate;  // f_s, Hz
    double carrier_freq; // f_c, Hz
    int block_len;       // L, samples filtered per pulse

    int n_pulses() const { return static_cast<int>(pulses.size()); }

    /// N: longest pulse in samples.
    int max_pulse_len() const {
        int n = 0;
        for (const auto& p : pulses) n = std::max<int>(n, static_cast<int>(p.samples.size()));
        return n;
    }

    /// J = L - N + 1 range bins per pulse.
    int n_range_bins() const { return block_len - max_pulse_len() + 1; }

    double start_time(int m) const {
        return static_cast<double>(pulses[static_cast<std::size_t>(m)].start_sample) / sample_rate;
    }

    double duration(int m) const {
        return static_cast<double>(pulses[static_cast<std::size_t>(m)].samples.size()) / sample_rate;
    }

    /// End of the last pulse; the observation time used for Doppler spacing.
    double observation_time() const {
        int m = n_pulses() - 1;
        return start_time(m) + duration(m);
    }
};

/// Centered linear up-chirp: sample n carries phase
/// pi * (bandwidth/duration) * (t_n - duration/2)^2 with t_n = n / sample_rate.
/// Instantaneous frequency sweeps -B/2 .. B/2 across the pulse.
inline cvec lfm_pulse(double bandwidth, double duration, double sample_rate) {
    require(duration > 0.0, "lfm_pulse: duration must be positive");
    require(sample_rate > 0.0, "lfm_pulse: sample_rate must be positive");
    require(bandwidth >= 0.0, "lfm_pulse: bandwidth must be non-negative");
    require(sample_rate >= bandwidth, "lfm_pulse: bandwidth exceeds complex Nyquist rate");
    const auto n = static_cast<std::int64_t>(std::llround(sample_rate * duration));
    require(n >= 2, "lfm_pulse: fewer than two samples in the pulse");

    const double rate = bandwidth / duration;
    cvec s(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate - duration / 2.0;
        const double phase = M_PI * rate * t * t;
        s[static_cast<std::size_t>(i)] = std::polar(1.0, phase);
    }
    return s;
}

/// Draw pulse start times with intervals uniform on [pri_low, pri_high],
/// each interval rounded half-away-from-zero onto the sampling grid.
/// The first start time is always 0.
inline std::vector<double> draw_irregular_pri(int n_pulses, double pri_low, double pri_high,
                                              double sample_rate, Rng& rng) {
    require(n_pulses >= 1, "draw_irregular_pri: need at least one pulse");
    require(pri_low > 0.0, "draw_irregular_pri: pri_low must be positive");
    require(pri_low <= pri_high, "draw_irregular_pri: pri_low exceeds pri_high");
    require(sample_rate > 0.0, "draw_irregular_pri: sample_rate must be positive");

    std::vector<double> starts(static_cast<std::size_t>(n_pulses));
    std::int64_t cur = 0;
    starts[0] = 0.0;
    for (int m = 1; m < n_pulses; ++m) {
        const double pri = rng.uniform(pri_low, pri_high);
        const auto pri_samples = static_cast<std::int64_t>(std::llround(pri * sample_rate));
        cur += pri_samples;
        starts[static_cast<std::size_t>(m)] = static_cast<double>(cur) / sample_rate;
    }
    return starts;
}

inline constexpr int block_len_auto = 0;

/// Assemble and validate a pulse train. block_len = block_len_auto picks the
/// largest admissible L, i.e. the minimum inter-pulse interval in samples.
inline PulseTrain assemble_train(std::vector<cvec> pulse_samples,
                                 const std::vector<double>& start_times,
                                 double sample_rate, double carrier_freq,
                                 int block_len = block_len_auto) {
    require(!pulse_samples.empty(), "assemble_train: no pulses");
    require(pulse_samples.size() == start_times.size(),
            "assemble_train: pulse/start-time count mismatch");
    require(sample_rate > 0.0, "assemble_train: sample_rate must be positive");

    const auto m_count = static_cast<int>(pulse_samples.size());
    std::vector<std::int64_t> start_samples(pulse_samples.size());
    for (int m = 0; m < m_count; ++m) {
        const double t = start_times[static_cast<std::size_t>(m)];
        const auto s = static_cast<std::int64_t>(std::llround(t * sample_rate));
        require(std::abs(t * sample_rate - static_cast<double>(s)) < 1e-6,
                "assemble_train: start time " + std::to_string(t) + " s is off the sampling grid");
        start_samples[static_cast<std::size_t>(m)] = s;
    }
    require(start_samples[0] == 0, "assemble_train: first start time must be 0");

    int n_max = 0;
    std::int64_t min_interval = 0;
    for (int m = 0; m < m_count; ++m) {
        const auto len = static_cast<std::int64_t>(pulse_samples[static_cast<std::size_t>(m)].size());
        require(len >= 1, "assemble_train: empty pulse waveform");
        n_max = std::max<int>(n_max, static_cast<int>(len));
        if (m + 1 < m_count) {
            const std::int64_t gap =
                start_samples[static_cast<std::size_t>(m + 1)] - start_samples[static_cast<std::size_t>(m)];
            require(gap > 0, "assemble_train: start times must be strictly increasing");
            require(gap > len, "assemble_train: pulse " + std::to_string(m + 1) +
                                   " overlaps the previous pulse");
            min_interval = (m == 0) ? gap : std::min(min_interval, gap);
        }
    }

    int L = block_len;
    if (L == block_len_auto) {
        require(m_count >= 2,
                "assemble_train: block_len required for single-pulse trains (no interval to infer it from)");
        L = static_cast<int>(min_interval);
    }
    require(L >= n_max, "assemble_train: block_len gives L - N + 1 < 1 range bins");
    if (m_count >= 2)
        require(static_cast<std::int64_t>(L) <= min_interval,
                "assemble_train: block_len exceeds the minimum pulse interval");

    PulseTrain train;
    train.pulses.reserve(pulse_samples.size());
    for (int m = 0; m < m_count; ++m)
        train.pulses.push_back({std::move(pulse_samples[static_cast<std::size_t>(m)]),
                                start_samples[static_cast<std::size_t>(m)]});
    train.sample_rate = sample_rate;
    train.carrier_freq = carrier_freq;
    train.block_len = L;
    return train;
}

} // namespace kcf
