#pragma once

#include <algorithm>
#include <limits>

#include "kcf/common.hpp"
#include "kcf/operators.hpp"
#include "kcf/solver.hpp"

namespace kcf {

/// Range-velocity power map, k-major like the coefficient vectors.
struct RangeDopplerMap {
    int n_delays = 0;
    int n_velocities = 0;
    rvec power;

    std::size_t flat(int j, int k) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(n_delays) +
               static_cast<std::size_t>(j);
    }
    double at(int j, int k) const { return power[flat(j, k)]; }
};

struct TargetEstimate {
    int delay_bin = 0;
    int velocity_bin = 0;
    double delay = 0.0;    // s
    double velocity = 0.0; // m/s
    cplx amplitude;
    double power_db = 0.0; // map power at selection
    double loss_db = std::numeric_limits<double>::quiet_NaN();
};

/// |A_T^H y|^2 using the same FFT adjoint as the clutter operator.
inline RangeDopplerMap matched_filter_map(const cvec& y, const ClutterOperator& op) {
    const cvec f = op.adjoint(y);
    RangeDopplerMap map;
    map.n_delays = op.n_delays();
    map.n_velocities = op.n_velocities();
    map.power.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) map.power[i] = std::norm(f[i]);
    return map;
}

inline RangeDopplerMap matched_filter_map(const cvec& y, const PulseTrain& train,
                                          const RangeDopplerGrid& grid) {
    return matched_filter_map(y, ClutterOperator(train, grid));
}

/// Cells whose power is >= all of their 8 neighbors, sorted by power
/// descending. Ranking peaks instead of raw cells keeps one strong response
/// from occupying several top slots with its own sidelobe skirt.
inline std::vector<std::pair<int, int>> top_peaks(const RangeDopplerMap& map, int count) {
    std::vector<std::pair<int, int>> peaks;
    for (int k = 0; k < map.n_velocities; ++k)
        for (int j = 0; j < map.n_delays; ++j) {
            const double v = map.at(j, k);
            bool is_peak = v > 0.0;
            for (int dk = -1; dk <= 1 && is_peak; ++dk)
                for (int dj = -1; dj <= 1 && is_peak; ++dj) {
                    if (dj == 0 && dk == 0) continue;
                    const int jj = j + dj;
                    const int kk = k + dk;
                    if (jj < 0 || jj >= map.n_delays || kk < 0 || kk >= map.n_velocities) continue;
                    if (map.at(jj, kk) > v) is_peak = false;
                }
            if (is_peak) peaks.emplace_back(j, k);
        }
    std::sort(peaks.begin(), peaks.end(), [&](const auto& a, const auto& b) {
        return map.at(a.first, a.second) > map.at(b.first, b.second);
    });
    if (static_cast<int>(peaks.size()) > count) peaks.resize(static_cast<std::size_t>(count));
    return peaks;
}

namespace detail {

/// In-place Cholesky solve of a small Hermitian PD system (pursuit refits are
/// never larger than the iteration count).
inline cvec solve_hermitian_small(std::vector<cvec> g, cvec rhs) {
    const std::size_t n = rhs.size();
    for (std::size_t i = 0; i < n; ++i) {
        double d = std::real(g[i][i]);
        for (std::size_t p = 0; p < i; ++p) d -= std::norm(g[i][p]);
        require(d > 0.0, "pursuit refit: selected atoms are linearly dependent");
        const double root = std::sqrt(d);
        g[i][i] = root;
        for (std::size_t r = i + 1; r < n; ++r) {
            cplx v = g[r][i];
            for (std::size_t p = 0; p < i; ++p) v -= g[r][p] * std::conj(g[i][p]);
            g[r][i] = v / root;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        cplx v = rhs[i];
        for (std::size_t p = 0; p < i; ++p) v -= g[i][p] * rhs[p];
        rhs[i] = v / std::real(g[i][i]);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        cplx v = rhs[ii];
        for (std::size_t p = ii + 1; p < n; ++p) v -= std::conj(g[p][ii]) * rhs[p];
        rhs[ii] = v / std::real(g[ii][ii]);
    }
    return rhs;
}

} // namespace detail

/// Greedy pursuit over the target dictionary: pick the strongest map cell,
/// refit all selected amplitudes jointly by least squares, subtract, repeat.
/// Stops early when the candidate peak falls below threshold_db over the
/// median map power. Estimates come back sorted by |amplitude| descending.
inline std::vector<TargetEstimate> estimate_targets(const cvec& y_filt, const ClutterOperator& op,
                                                    const RangeDopplerGrid& grid, int n_iterations,
                                                    double threshold_db = 13.0) {
    require(n_iterations >= 1, "estimate_targets: need at least one iteration");
    require(y_filt.size() == op.range_size(), "estimate_targets: expected M*L samples");
    require(grid.n_delays() == op.n_delays() && grid.n_velocities() == op.n_velocities(),
            "estimate_targets: grid does not match the operator");

    std::vector<TargetEstimate> picks;
    std::vector<cvec> atoms; // dictionary columns of the selected cells
    cvec residual = y_filt;
    double first_peak = 0.0;

    for (int it = 0; it < n_iterations; ++it) {
        const RangeDopplerMap map = matched_filter_map(residual, op);
        rvec sorted = map.power;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        const auto peak_it = std::max_element(map.power.begin(), map.power.end());
        const double peak = *peak_it;
        if (peak <= 0.0 || peak < median * std::pow(10.0, threshold_db / 10.0)) break;
        // once the residual map has dropped to fp rubble relative to the first
        // pick, anything the median rule lets through is cancellation noise
        if (it == 0) first_peak = peak;
        if (peak < 1e-24 * first_peak) break;

        const auto flat = static_cast<std::size_t>(peak_it - map.power.begin());
        const int j = static_cast<int>(flat % static_cast<std::size_t>(op.n_delays()));
        const int k = static_cast<int>(flat / static_cast<std::size_t>(op.n_delays()));

        cvec unit(op.domain_size());
        unit[flat] = 1.0;
        atoms.push_back(op.forward(unit));

        TargetEstimate est;
        est.delay_bin = j;
        est.velocity_bin = k;
        est.delay = grid.delay(j);
        est.velocity = grid.velocity(k);
        est.power_db = 10.0 * std::log10(peak);
        picks.push_back(est);

        // joint refit of every selected amplitude against the original input
        const std::size_t s = atoms.size();
        std::vector<cvec> gram(s, cvec(s));
        cvec rhs(s);
        for (std::size_t a = 0; a < s; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                gram[a][b] = dot(atoms[a], atoms[b]);
                if (b < a) gram[b][a] = std::conj(gram[a][b]);
            }
            rhs[a] = dot(atoms[a], y_filt);
        }
        const cvec amps = detail::solve_hermitian_small(gram, rhs);

        residual = y_filt;
        for (std::size_t a = 0; a < s; ++a) {
            picks[a].amplitude = amps[a];
            for (std::size_t i = 0; i < residual.size(); ++i)
                residual[i] -= amps[a] * atoms[a][i];
        }
    }

    std::sort(picks.begin(), picks.end(), [](const TargetEstimate& a, const TargetEstimate& b) {
        return std::abs(a.amplitude) > std::abs(b.amplitude);
    });
    return picks;
}

/// 10 log10(before/after) at one cell; +inf when the filter removed the cell
/// entirely (flagged fully suppressed by the caller).
inline double peak_power_loss(const RangeDopplerMap& before, const RangeDopplerMap& after, int j,
                              int k) {
    require(before.n_delays == after.n_delays && before.n_velocities == after.n_velocities,
            "peak_power_loss: map shapes differ");
    require(j >= 0 && j < before.n_delays && k >= 0 && k < before.n_velocities,
            "peak_power_loss: cell outside the map");
    const double b = before.at(j, k);
    const double a = after.at(j, k);
    require(b > 0.0, "peak_power_loss: zero reference power at the target cell");
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(b / a);
}

struct AlternatingResult {
    std::vector<TargetEstimate> targets;
    FilterOutput filter;      // last clutter-filter pass
    rvec residual_norms;      // ||y - A_T x_T - y_C_hat|| per outer iteration
};

/// Alternate clutter filtering and target pursuit. Outer iteration k filters
/// y minus the current target synthesis, then re-estimates the targets from
/// the filtered output. n_outer = 1 is the plain two-step pipeline.
inline AlternatingResult alternating_solve(const cvec& y, const ClutterOperator& clutter_op,
                                           const ClutterKernel& kernel, const FilterConfig& cfg,
                                           const ClutterOperator& target_op,
                                           const RangeDopplerGrid& target_grid, int n_outer,
                                           int n_target_iterations, double threshold_db = 13.0) {
    require(n_outer >= 1, "alternating_solve: need at least one outer iteration");
    require(y.size() == clutter_op.range_size(), "alternating_solve: expected M*L samples");
    require(target_op.range_size() == clutter_op.range_size(),
            "alternating_solve: dictionaries disagree on the signal length");

    AlternatingResult result;
    cvec target_signal(y.size(), cplx{});
    for (int outer = 0; outer < n_outer; ++outer) {
        cvec input(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) input[i] = y[i] - target_signal[i];
        result.filter = filter_clutter(input, clutter_op, kernel, cfg);
        result.targets = estimate_targets(result.filter.y_filt, target_op, target_grid,
                                          n_target_iterations, threshold_db);

        cvec coeffs(target_op.domain_size(), cplx{});
        for (const auto& t : result.targets)
            coeffs[target_grid.flat_index(t.delay_bin, t.velocity_bin)] += t.amplitude;
        target_signal = target_op.forward(coeffs);

        double r = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            r += std::norm(y[i] - target_signal[i] - result.filter.clutter_estimate[i]);
        result.residual_norms.push_back(std::sqrt(r));
    }
    return result;
}

} // namespace kcf
