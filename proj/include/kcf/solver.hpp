#pragma once

#include <iostream>
#include <utility>

#include "kcf/common.hpp"
#include "kcf/kernel.hpp"
#include "kcf/operators.hpp"

namespace kcf {

enum class Preconditioner { none, block_circulant };

struct FilterConfig {
    double lambda_c = 1.0;
    double pcg_abs_tol = 1e-13;
    double pcg_rel_tol = 1e-10;
    int max_iterations = 0; // 0: min(10 * unknowns, 5000)
    Preconditioner preconditioner = Preconditioner::block_circulant;
    bool reproducible_reduction = true; // fixed-order sums in the operators
    bool check_hermitian = false;       // randomized symmetry probe before solving

    void validate() const {
        require(lambda_c >= 0.0, "solver: lambda_c must be non-negative");
        require(pcg_abs_tol > 0.0 && pcg_rel_tol > 0.0, "solver: tolerances must be positive");
        require(max_iterations >= 0, "solver: max_iterations must be non-negative");
    }

    int resolve_max_iterations(std::size_t unknowns) const {
        if (max_iterations > 0) return max_iterations;
        const std::size_t cap = std::min<std::size_t>(10 * unknowns, 5000);
        return static_cast<int>(std::max<std::size_t>(cap, 1));
    }
};

struct PcgResult {
    cvec x;
    int iterations = 0;
    rvec residual_history; // ||r||_2, entry 0 is the initial residual
    bool converged = false;
    int n_apply = 0;   // operator applications, incl. true-residual checks
    int n_precond = 0; // preconditioner applications
};

struct FilterOutput {
    cvec y_filt;           // y - clutter_estimate, elementwise
    cvec clutter_estimate; // A_C g
    cvec coefficients;     // g, J*K k-major
    int iterations = 0;
    rvec residual_history;
    bool converged = false;
    bool used_pseudo_inverse = false; // dense oracle only, singular fallback
    int n_apply = 0;
    int n_precond = 0;
};

/// Conjugate gradients on a Hermitian system apply(x) = f with a Hermitian PD
/// preconditioner. Termination on ||r|| <= max(abs_tol, rel_tol * ||f||),
/// verified against the true residual before convergence is declared (the
/// recurrence drifts at tolerances near machine precision). Singular-but-
/// consistent systems (lambda_c = 0) end via the stagnation rule instead:
/// relative residual change below 1e-14 across 20 iterations returns the
/// minimum-residual iterate flagged converged = false.
template <typename Apply, typename Precond>
PcgResult pcg(Apply&& apply, Precond&& precond, const cvec& f, const FilterConfig& cfg) {
    cfg.validate();
    const std::size_t n = f.size();
    require(n > 0, "pcg: empty right-hand side");

    PcgResult res;
    res.x.assign(n, cplx{});

    if (cfg.check_hermitian) {
        Rng rng(0xA11CEull);
        cvec u(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            u[i] = {rng.gaussian(), rng.gaussian()};
            v[i] = {rng.gaussian(), rng.gaussian()};
        }
        const cplx a = dot(u, apply(v));
        const cplx b = dot(v, apply(u));
        res.n_apply += 2;
        const double scale = std::abs(a) + std::abs(b);
        if (scale > 0.0 && std::abs(a - std::conj(b)) > 1e-8 * scale)
            throw invalid_argument_error("pcg: operator failed the Hermitian probe");
    }

    const double f_norm = norm2(f);
    const double threshold = std::max(cfg.pcg_abs_tol, cfg.pcg_rel_tol * f_norm);
    cvec r = f;
    double rn = f_norm;
    res.residual_history.push_back(rn);
    if (rn <= threshold) {
        res.converged = true;
        return res;
    }

    cvec z = precond(r);
    ++res.n_precond;
    cvec p = z;
    double rz = std::real(dot(r, z));
    require(rz > 0.0, "pcg: preconditioner is not positive definite on the initial residual");

    cvec best_x = res.x;
    double best_rn = rn;
    const int max_iter = cfg.resolve_max_iterations(n);
    int restarts = 0;

    cvec q;
    while (res.iterations < max_iter) {
        q = apply(p);
        ++res.n_apply;
        const double pq = std::real(dot(p, q));
        const double p_scale = norm2(p);
        if (pq <= 1e-14 * p_scale * p_scale)
            throw numerical_breakdown_error(
                "pcg: non-positive curvature at iteration " + std::to_string(res.iterations + 1));
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * p[i];
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * q[i];
        ++res.iterations;
        rn = norm2(r);
        res.residual_history.push_back(rn);
        if (rn < best_rn) {
            best_rn = rn;
            best_x = res.x;
        }

        if (rn <= threshold) {
            // re-derive the residual from x before trusting the recurrence
            q = apply(res.x);
            ++res.n_apply;
            for (std::size_t i = 0; i < n; ++i) r[i] = f[i] - q[i];
            rn = norm2(r);
            if (rn <= threshold) {
                res.converged = true;
                return res;
            }
            if (++restarts > 3) break;
            res.residual_history.back() = rn;
            if (rn < best_rn) {
                best_rn = rn;
                best_x = res.x;
            }
            z = precond(r);
            ++res.n_precond;
            p = z;
            rz = std::real(dot(r, z));
            if (rz <= 0.0) break;
            continue;
        }

        const std::size_t h = res.residual_history.size();
        if (h > 20) {
            const double past = res.residual_history[h - 21];
            if (past > 0.0 && std::abs(rn - past) < 1e-14 * past) break;
        }

        z = precond(r);
        ++res.n_precond;
        const double rz_next = std::real(dot(r, z));
        const double beta = rz_next / rz;
        rz = rz_next;
        if (rz <= 0.0) break;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    res.x = std::move(best_x);
    res.converged = false;
    return res;
}

/// Doppler-blockwise circulant approximation of the Gram operator. Block k is
/// inverted in the frequency domain with symbol sum_m |F s_m|^2 plus the mean
/// regularizer weight of the block; the phase cross terms between Doppler
/// blocks are dropped. Floored so the inverse exists even for sigma = 0 and
/// waveforms with spectral nulls. Applying it costs 2K transforms.
class BlockCirculantPreconditioner {
public:
    BlockCirculantPreconditioner(const ClutterOperator& op, const rvec& sigma) : op_(op) {
        const int L = op.block_len();
        const int K = op.n_velocities();
        const int J = op.n_delays();
        if (!sigma.empty())
            require(sigma.size() == op.domain_size(), "preconditioner: weight length mismatch");

        rvec base(static_cast<std::size_t>(L), 0.0);
        for (int m = 0; m < op.n_pulses(); ++m) {
            const rvec& pow = op.power_spectrum(m);
            for (int f = 0; f < L; ++f)
                base[static_cast<std::size_t>(f)] += pow[static_cast<std::size_t>(f)];
        }

        inv_symbol_.assign(static_cast<std::size_t>(K), rvec(static_cast<std::size_t>(L)));
        double peak = 0.0;
        for (int k = 0; k < K; ++k) {
            double mean_w = 0.0;
            if (!sigma.empty()) {
                for (int j = 0; j < J; ++j)
                    mean_w += sigma[static_cast<std::size_t>(k) * static_cast<std::size_t>(J) +
                                    static_cast<std::size_t>(j)];
                mean_w /= static_cast<double>(J);
            }
            auto& sym = inv_symbol_[static_cast<std::size_t>(k)];
            for (int f = 0; f < L; ++f) {
                sym[static_cast<std::size_t>(f)] = base[static_cast<std::size_t>(f)] + mean_w;
                peak = std::max(peak, sym[static_cast<std::size_t>(f)]);
            }
        }
        require(peak > 0.0, "preconditioner: zero operator symbol");
        const double floor = 1e-12 * peak;
        for (auto& sym : inv_symbol_)
            for (auto& v : sym) v = 1.0 / std::max(v, floor);
    }

    cvec apply(const cvec& r) const {
        require(r.size() == op_.domain_size(), "preconditioner: input length mismatch");
        const int L = op_.block_len();
        const int J = op_.n_delays();
        const int K = op_.n_velocities();
        cvec out(r.size());
        cvec padded(static_cast<std::size_t>(L));
        cvec spec(static_cast<std::size_t>(L));
        cvec back(static_cast<std::size_t>(L));
        for (int k = 0; k < K; ++k) {
            std::fill(padded.begin(), padded.end(), cplx{});
            std::copy(r.begin() + static_cast<std::ptrdiff_t>(k) * J,
                      r.begin() + static_cast<std::ptrdiff_t>(k) * J + J, padded.begin());
            op_.plan().forward(padded.data(), spec.data());
            const rvec& sym = inv_symbol_[static_cast<std::size_t>(k)];
            for (int f = 0; f < L; ++f)
                spec[static_cast<std::size_t>(f)] *= sym[static_cast<std::size_t>(f)];
            op_.plan().inverse(spec.data(), back.data());
            std::copy(back.begin(), back.begin() + J,
                      out.begin() + static_cast<std::ptrdiff_t>(k) * J);
        }
        return out;
    }

private:
    const ClutterOperator& op_;
    std::vector<rvec> inv_symbol_;
};

/// Clutter filtering: g solves (A_C^H A_C + lambda_c Sigma_C^-1) g = A_C^H y,
/// the clutter estimate is A_C g and the filtered signal the brute subtraction.
inline FilterOutput filter_clutter(const cvec& y, const ClutterOperator& op,
                                   const ClutterKernel& kernel, const FilterConfig& cfg) {
    cfg.validate();
    require(y.size() == op.range_size(), "filter_clutter: expected M*L samples");
    require(kernel.size() == op.domain_size(), "filter_clutter: kernel/grid size mismatch");
    if (cfg.lambda_c == 0.0)
        std::cerr << "warning: lambda_c = 0 makes the normal equations singular whenever "
                     "J*K > M*(L-N+1); relying on the stagnation rule\n";

    const rvec sigma = inverse_weights(kernel, cfg.lambda_c);
    const cvec f = op.adjoint(y);
    auto apply = [&](const cvec& g) { return op.gram_regularized(sigma, g); };

    PcgResult res;
    if (cfg.preconditioner == Preconditioner::block_circulant) {
        BlockCirculantPreconditioner pre(op, sigma);
        res = pcg(apply, [&](const cvec& r) { return pre.apply(r); }, f, cfg);
    } else {
        res = pcg(apply, [](const cvec& r) { return r; }, f, cfg);
    }

    FilterOutput out;
    out.clutter_estimate = op.forward(res.x);
    out.y_filt.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out.y_filt[i] = y[i] - out.clutter_estimate[i];
    out.coefficients = std::move(res.x);
    out.iterations = res.iterations;
    out.residual_history = std::move(res.residual_history);
    out.converged = res.converged;
    out.n_apply = res.n_apply;
    out.n_precond = res.n_precond;
    return out;
}

} // namespace kcf
