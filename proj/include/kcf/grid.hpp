#pragma once

#include <optional>
#include <utility>

#include "kcf/common.hpp"
#include "kcf/waveform.hpp"

namespace kcf {

namespace grid_detail {
/// Cells on [0, span] spaced dv apart. The endpoint counts when dv divides
/// the span (up to fp fuzz); otherwise the last cell stays below it.
inline int cell_count(double span, double dv) {
    const double q = span / dv;
    const auto r = static_cast<double>(std::llround(q));
    if (std::abs(q - r) < 1e-9 * std::max(1.0, std::abs(q)))
        return static_cast<int>(r) + 1;
    return static_cast<int>(std::floor(q)) + 1;
}
} // namespace grid_detail

/// One uniform stretch of velocities: v0, v0+dv, ..., v1 (inclusive).
struct VelocitySegment {
    double v0;
    double v1;
    double dv;
};

/// The rectangular (tau_j, v_k) dictionary grid. Delays are per-pulse fast
/// time, pinned to consecutive multiples of 1/f_s starting at zero; velocities
/// are either one uniform grid or a sorted union of uniform segments.
class RangeDopplerGrid {
public:
    static RangeDopplerGrid uniform(int n_delays, double delay_step, double v_min, double v_max,
                                    double dv) {
        require(dv > 0.0, "grid: velocity spacing must be positive");
        require(v_max >= v_min, "grid: v_max below v_min");
        RangeDopplerGrid g;
        g.init_delays(n_delays, delay_step);
        const int k_count = grid_detail::cell_count(v_max - v_min, dv);
        for (int k = 0; k < k_count; ++k) {
            g.velocities_.push_back(v_min + dv * k);
            g.spacings_.push_back(dv);
        }
        g.uniform_ = true;
        return g;
    }

    static RangeDopplerGrid segments(int n_delays, double delay_step,
                                     const std::vector<VelocitySegment>& segs) {
        require(!segs.empty(), "grid: empty velocity segment list");
        RangeDopplerGrid g;
        g.init_delays(n_delays, delay_step);
        for (const auto& s : segs) {
            require(s.dv > 0.0, "grid: velocity spacing must be positive");
            require(s.v1 >= s.v0, "grid: segment end below start");
            const int k_count = grid_detail::cell_count(s.v1 - s.v0, s.dv);
            for (int k = 0; k < k_count; ++k) {
                g.velocities_.push_back(s.v0 + s.dv * k);
                g.spacings_.push_back(s.dv);
            }
        }
        for (std::size_t k = 1; k < g.velocities_.size(); ++k)
            require(g.velocities_[k] > g.velocities_[k - 1],
                    "grid: velocity segments must be sorted and disjoint");
        g.uniform_ = segs.size() == 1;
        return g;
    }

    /// Grid matched to a train: J = L - N + 1 delays spaced 1/f_s.
    static RangeDopplerGrid for_train(const PulseTrain& train, double v_min, double v_max,
                                      double dv) {
        return uniform(train.n_range_bins(), 1.0 / train.sample_rate, v_min, v_max, dv);
    }

    static RangeDopplerGrid for_train(const PulseTrain& train,
                                      const std::vector<VelocitySegment>& segs) {
        return segments(train.n_range_bins(), 1.0 / train.sample_rate, segs);
    }

    int n_delays() const { return n_delays_; }
    int n_velocities() const { return static_cast<int>(velocities_.size()); }
    std::size_t size() const {
        return static_cast<std::size_t>(n_delays_) * velocities_.size();
    }
    bool is_uniform() const { return uniform_; }

    double delay(int j) const { return delay_step_ * j; }
    double delay_step() const { return delay_step_; }
    double velocity(int k) const { return velocities_[static_cast<std::size_t>(k)]; }
    double velocity_spacing(int k) const { return spacings_[static_cast<std::size_t>(k)]; }
    const std::vector<double>& velocities() const { return velocities_; }

    /// Flat index into coefficient vectors; k-major blocks of J contiguous
    /// range bins, matching the operator block layout.
    std::size_t flat_index(int j, int k) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(n_delays_) +
               static_cast<std::size_t>(j);
    }

    /// Exact-match lookup with half-spacing tolerance; nullopt when off-grid.
    std::optional<std::pair<int, int>> index_of(double tau, double v) const {
        const auto j = static_cast<int>(std::llround(tau / delay_step_));
        if (j < 0 || j >= n_delays_) return std::nullopt;
        if (std::abs(tau - delay(j)) > 0.5 * delay_step_) return std::nullopt;
        int best = -1;
        double best_err = 0.0;
        for (int k = 0; k < n_velocities(); ++k) {
            const double err = std::abs(v - velocity(k));
            if (best < 0 || err < best_err) {
                best = k;
                best_err = err;
            }
        }
        if (best < 0 || best_err > 0.5 * velocity_spacing(best)) return std::nullopt;
        return std::make_pair(j, best);
    }

private:
    void init_delays(int n_delays, double delay_step) {
        require(n_delays >= 1, "grid: need at least one delay bin");
        require(delay_step > 0.0, "grid: delay step must be positive");
        n_delays_ = n_delays;
        delay_step_ = delay_step;
    }

    int n_delays_ = 0;
    double delay_step_ = 0.0;
    std::vector<double> velocities_;
    std::vector<double> spacings_;
    bool uniform_ = true;
};

/// Rule-of-thumb Doppler spacing c / (2 T_obs f_c), with the observation time
/// taken to the end of the last pulse.
inline double recommended_doppler_spacing(const PulseTrain& train) {
    return speed_of_light / (2.0 * train.observation_time() * train.carrier_freq);
}

/// Per-pulse Doppler phase: phi_m[k] = exp(j 2 pi T_s,m (2 v_k / c) f_c).
/// The first pulse starts at t = 0, so phi_0 is all ones.
inline cplx doppler_phase(double start_time, double velocity, double carrier_freq) {
    return std::polar(1.0, 2.0 * M_PI * start_time * (2.0 * velocity / speed_of_light) * carrier_freq);
}

inline std::vector<cvec> doppler_phases(const RangeDopplerGrid& grid, const PulseTrain& train) {
    std::vector<cvec> phases(static_cast<std::size_t>(train.n_pulses()));
    for (int m = 0; m < train.n_pulses(); ++m) {
        auto& row = phases[static_cast<std::size_t>(m)];
        row.resize(static_cast<std::size_t>(grid.n_velocities()));
        for (int k = 0; k < grid.n_velocities(); ++k)
            row[static_cast<std::size_t>(k)] =
                doppler_phase(train.start_time(m), grid.velocity(k), train.carrier_freq);
    }
    return phases;
}

} // namespace kcf
