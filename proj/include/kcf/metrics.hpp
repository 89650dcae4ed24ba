#pragma once

#include "kcf/common.hpp"
#include "kcf/scene.hpp"
#include "kcf/solver.hpp"

namespace kcf {

/// Best-fit-rate norm treatment. per_sample sums |c_i - y_i| over samples
/// (each complex scalar's norm taken individually, the expression as printed);
/// aggregate_l2 uses the conventional whole-vector Euclidean norms.
enum class BfrNorm { per_sample, aggregate_l2 };

struct BfrResult {
    double bfr = 0.0; // percent, [0, 100]
    double mse = 0.0;
    std::size_t n_samples = 0;
};

/// 100 * max{0, 1 - ||c - est|| / ||c - mean(c)||}, clamped to [0, 100].
/// Throws when c is constant: the reference deviation is zero and the score
/// is undefined.
inline double bfr(const cvec& c, const cvec& est, BfrNorm norm = BfrNorm::per_sample) {
    require(c.size() == est.size(), "bfr: length mismatch");
    require(c.size() >= 2, "bfr: need at least two samples");
    cplx mean{0.0, 0.0};
    for (const auto& z : c) mean += z;
    mean /= static_cast<double>(c.size());

    double num = 0.0;
    double den = 0.0;
    if (norm == BfrNorm::per_sample) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            num += std::abs(c[i] - est[i]);
            den += std::abs(c[i] - mean);
        }
    } else {
        for (std::size_t i = 0; i < c.size(); ++i) {
            num += std::norm(c[i] - est[i]);
            den += std::norm(c[i] - mean);
        }
        num = std::sqrt(num);
        den = std::sqrt(den);
    }
    if (den == 0.0)
        throw undefined_metric_error("bfr: reference signal is constant, score undefined");
    return 100.0 * std::max(0.0, 1.0 - num / den);
}

/// Sum of squared magnitudes of the differences.
inline double mse(const cvec& c, const cvec& est) {
    require(c.size() == est.size(), "mse: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += std::norm(c[i] - est[i]);
    return s;
}

inline BfrResult evaluate_fit(const cvec& c, const cvec& est, BfrNorm norm = BfrNorm::per_sample) {
    return {bfr(c, est, norm), mse(c, est), c.size()};
}

/// Filter response to a unit scatterer probe: synthesize a lone unit target at
/// (tau_j, v) with the per-sample phase model, filter it, and report
/// 20 log10(||y_filt|| / ||y_in||). Probe velocities need not be grid points.
inline rvec filter_response_curve(const PulseTrain& train, const RangeDopplerGrid& grid,
                                  const ClutterKernel& kernel, const FilterConfig& cfg,
                                  int range_bin, const rvec& probe_velocities) {
    require(range_bin >= 0 && range_bin < grid.n_delays(),
            "filter_response_curve: range bin outside the grid");
    const ClutterOperator op(train, grid);
    rvec response(probe_velocities.size());
    for (std::size_t i = 0; i < probe_velocities.size(); ++i) {
        Scene probe;
        probe.targets.push_back({grid.delay(range_bin), probe_velocities[i], cplx{1.0, 0.0}});
        const cvec y_in = synthesize_received(train, grid, probe, SignalModel::full);
        const FilterOutput out = filter_clutter(y_in, op, kernel, cfg);
        response[i] = 20.0 * std::log10(norm2(out.y_filt) / norm2(y_in));
    }
    return response;
}

} // namespace kcf
