#pragma once

#include <Eigen/Dense>

#include "kcf/common.hpp"
#include "kcf/grid.hpp"
#include "kcf/kernel.hpp"
#include "kcf/solver.hpp"
#include "kcf/waveform.hpp"

namespace kcf {

/// Explicit M*L x J*K dictionary, the oracle the matrix-free path is tested
/// against. Guarded by an entry cap; anything larger belongs on the FFT path.
inline Eigen::MatrixXcd dense_materialize(const PulseTrain& train, const RangeDopplerGrid& grid,
                                          std::size_t max_entries = std::size_t{1} << 26) {
    require(grid.n_delays() == train.n_range_bins(),
            "dense_materialize: grid delay count must be L - N + 1");
    const auto rows = static_cast<std::size_t>(train.n_pulses()) *
                      static_cast<std::size_t>(train.block_len);
    const auto cols = grid.size();
    if (rows * cols > max_entries)
        throw resource_limit_error(
            "dense_materialize: " + std::to_string(rows * cols) +
            " complex entries exceed the cap of " + std::to_string(max_entries) +
            "; use the matrix-free operator instead");

    const int L = train.block_len;
    const int J = grid.n_delays();
    const int K = grid.n_velocities();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows),
                                                static_cast<Eigen::Index>(cols));
    for (int m = 0; m < train.n_pulses(); ++m) {
        const cvec& s = train.pulses[static_cast<std::size_t>(m)].samples;
        for (int k = 0; k < K; ++k) {
            const cplx phi = doppler_phase(train.start_time(m), grid.velocity(k),
                                           train.carrier_freq);
            for (int j = 0; j < J; ++j) {
                const auto col = static_cast<Eigen::Index>(grid.flat_index(j, k));
                for (std::size_t n = 0; n < s.size(); ++n)
                    a(static_cast<Eigen::Index>(m) * L + j + static_cast<Eigen::Index>(n), col) =
                        phi * s[n];
            }
        }
    }
    return a;
}

inline Eigen::VectorXcd to_eigen(const cvec& v) {
    return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline cvec from_eigen(const Eigen::VectorXcd& v) {
    return cvec(v.data(), v.data() + v.size());
}

/// Direct solve of the regularized normal equations on the materialized
/// dictionary. lambda_c = 0 falls back to the minimum-norm least-squares
/// solution (rank-revealing orthogonal decomposition) and flags it.
inline FilterOutput dense_filter_oracle(const cvec& y, const PulseTrain& train,
                                        const RangeDopplerGrid& grid, const ClutterKernel& kernel,
                                        double lambda_c,
                                        std::size_t max_entries = std::size_t{1} << 26) {
    require(lambda_c >= 0.0, "dense_filter_oracle: lambda_c must be non-negative");
    require(kernel.size() == grid.size(), "dense_filter_oracle: kernel/grid size mismatch");
    const Eigen::MatrixXcd a = dense_materialize(train, grid, max_entries);
    require(static_cast<std::size_t>(a.rows()) == y.size(),
            "dense_filter_oracle: expected M*L samples");
    const Eigen::VectorXcd yv = to_eigen(y);

    FilterOutput out;
    Eigen::VectorXcd g;
    if (lambda_c == 0.0) {
        g = a.completeOrthogonalDecomposition().solve(yv);
        out.used_pseudo_inverse = true;
    } else {
        Eigen::MatrixXcd gram = a.adjoint() * a;
        for (Eigen::Index i = 0; i < gram.rows(); ++i)
            gram(i, i) += lambda_c / kernel.variances[static_cast<std::size_t>(i)];
        g = gram.llt().solve(a.adjoint() * yv);
    }

    const Eigen::VectorXcd est = a * g;
    out.coefficients = from_eigen(g);
    out.clutter_estimate = from_eigen(est);
    out.y_filt.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out.y_filt[i] = y[i] - out.clutter_estimate[i];
    out.converged = true;
    return out;
}

} // namespace kcf
