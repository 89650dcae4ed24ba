// Acceptance gate: one criterion per invocation (argv[1] = 1..9), or all when
// run bare. Each criterion prints exactly one [PASS]/[FAIL] line; exit code 0
// only if everything requested passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "kcf/dense.hpp"
#include "kcf/harness.hpp"
#include "kcf/metrics.hpp"
#include "kcf/operators.hpp"
#include "kcf/scenario.hpp"
#include "kcf/solver.hpp"
#include "kcf/targets.hpp"

using namespace kcf;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
    void expect(bool cond, const std::string& why) {
        if (!cond) fail(why);
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---- random instance family shared by criteria 1 and 2 ---------------------

struct Instance {
    PulseTrain train;
    RangeDopplerGrid grid;
};

Instance random_instance(Rng& rng) {
    for (;;) {
        const int m = 1 + static_cast<int>(rng.uniform() * 4.0) % 4;
        const int n = 4 + static_cast<int>(rng.uniform() * 29.0) % 29; // 4..32
        const int l_max = 128;
        const int l = std::min(l_max, n + 3 + static_cast<int>(rng.uniform() * (l_max - n - 2)));
        const int k = 1 + static_cast<int>(rng.uniform() * 8.0) % 8;

        // avoid near-square systems: random dictionaries there can have
        // arbitrarily small nonzero singular values, which no fixed solver
        // tolerance survives
        const double aspect = static_cast<double>((l - n + 1) * k) / (m * l);
        if (aspect > 0.8 && aspect < 1.25) continue;

        const double fs = 1e6;
        std::vector<cvec> pulses;
        std::vector<double> starts;
        std::int64_t start = 0;
        for (int i = 0; i < m; ++i) {
            cvec s(static_cast<std::size_t>(n));
            for (auto& z : s) z = rng.circular_gaussian(1.0);
            pulses.push_back(std::move(s));
            starts.push_back(static_cast<double>(start) / fs);
            start += l + 1 + static_cast<int>(rng.uniform() * 7.0);
        }
        PulseTrain train = assemble_train(std::move(pulses), starts, fs, 1e10, l);

        const double v0 = -40.0 + 20.0 * rng.uniform();
        const double dv = 1.0 + 9.0 * rng.uniform();
        auto grid = RangeDopplerGrid::for_train(train, v0, v0 + dv * (k - 1), dv);
        return {std::move(train), std::move(grid)};
    }
}

cvec random_cvec(std::size_t n, Rng& rng) {
    cvec v(n);
    for (auto& z : v) z = rng.circular_gaussian(1.0);
    return v;
}

double rel_err(const cvec& a, const cvec& b) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += std::norm(a[i] - b[i]);
        den += std::norm(b[i]);
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

// ---- criterion 1 ------------------------------------------------------------

Check criterion_1() {
    Check c;
    Rng rng(0xACC1ull);
    double worst = 0.0;
    for (int trial = 0; trial < 24; ++trial) {
        const Instance inst = random_instance(rng);
        const ClutterOperator op(inst.train, inst.grid);

        ClutterKernel kernel;
        kernel.variances.resize(inst.grid.size());
        for (auto& v : kernel.variances) v = 0.1 + 2.9 * rng.uniform();
        const double lambda = std::pow(10.0, -6.0 + 8.0 * rng.uniform());

        FilterConfig cfg;
        cfg.lambda_c = lambda;
        cfg.pcg_abs_tol = 1e-14;
        cfg.pcg_rel_tol = 1e-12;

        const cvec y = random_cvec(op.range_size(), rng);
        const FilterOutput fast = filter_clutter(y, op, kernel, cfg);
        const FilterOutput oracle =
            dense_filter_oracle(y, inst.train, inst.grid, kernel, lambda);

        double dy = 0.0;
        double ny = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            dy += std::norm(fast.y_filt[i] - oracle.y_filt[i]);
            ny += std::norm(y[i]);
        }
        const double ratio = std::sqrt(dy / ny);
        worst = std::max(worst, ratio);
        if (ratio > 1e-8) {
            c.fail("instance " + std::to_string(trial) + ": |dy|/|y| = " + fmt(ratio) +
                   " at lambda " + fmt(lambda));
            return c;
        }
    }
    c.detail = "24 instances, worst |dy|/|y| = " + fmt(worst);
    return c;
}

// ---- criterion 2 ------------------------------------------------------------

Check criterion_2() {
    Check c;
    Rng rng(0xACC2ull);
    for (int trial = 0; trial < 10 && c.ok; ++trial) {
        const Instance inst = random_instance(rng);
        const ClutterOperator op(inst.train, inst.grid);

        // adjoint identity <v, A u> == <A^H v, u>
        const cvec u = random_cvec(op.domain_size(), rng);
        const cvec v = random_cvec(op.range_size(), rng);
        const cvec au = op.forward(u);
        const cvec atv = op.adjoint(v);
        const cplx lhs = dot(v, au);
        const cplx rhs = dot(atv, u);
        const double scale = norm2(v) * norm2(au) + std::abs(lhs);
        c.expect(std::abs(lhs - rhs) <= 1e-10 * scale,
                 "adjoint identity off by " + fmt(std::abs(lhs - rhs) / scale));

        // dense columns against unit-vector forwards
        const Eigen::MatrixXcd a = dense_materialize(inst.train, inst.grid);
        for (int probe = 0; probe < 3; ++probe) {
            const auto col =
                static_cast<std::size_t>(rng.uniform() * static_cast<double>(op.domain_size())) %
                op.domain_size();
            cvec e(op.domain_size(), cplx{});
            e[col] = 1.0;
            const cvec ae = op.forward(e);
            cvec dense_col(op.range_size());
            for (std::size_t i = 0; i < dense_col.size(); ++i)
                dense_col[i] = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col));
            c.expect(rel_err(ae, dense_col) <= 1e-10,
                     "dense column " + std::to_string(col) + " off by " +
                         fmt(rel_err(ae, dense_col)));
        }

        // Gram operator: Hermitian and PSD up to roundoff
        rvec sigma(op.domain_size());
        for (auto& s : sigma) s = 2.0 * rng.uniform();
        const cvec z = random_cvec(op.domain_size(), rng);
        const cvec w = random_cvec(op.domain_size(), rng);
        const cvec gz = op.gram_regularized(sigma, z);
        const cvec gw = op.gram_regularized(sigma, w);
        const cplx q = dot(z, gz);
        const double qscale = norm2(z) * norm2(gz) + std::abs(q);
        c.expect(std::abs(q.imag()) <= 1e-10 * qscale, "quadratic form not real");
        c.expect(q.real() >= -1e-10 * qscale, "quadratic form negative");
        const cplx s1 = dot(w, gz);
        const cplx s2 = dot(z, gw);
        c.expect(std::abs(s1 - std::conj(s2)) <=
                     1e-10 * (std::abs(s1) + norm2(w) * norm2(gz)),
                 "Gram operator not Hermitian");
    }
    if (c.ok) c.detail = "10 instances: adjoint, dense columns, Gram HPSD";
    return c;
}

// ---- criterion 3 ------------------------------------------------------------

// unnormalized: the weights tile to sigma * sqrt(2 pi), not to 1
double gauss_kernel(double v, double mu, double sd) {
    const double t = (v - mu) / sd;
    return std::exp(-0.5 * t * t);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, eps, 40);
}

Check criterion_3() {
    Check c;
    Rng rng(0xACC3ull);
    double worst = 0.0;
    for (int trial = 0; trial < 40 && c.ok; ++trial) {
        DopplerSpectrum spec{-10.0 + 20.0 * rng.uniform(), 0.3 + 4.0 * rng.uniform()};
        const double v = spec.mean_velocity + (2.0 * rng.uniform() - 1.0) * 4.0 * spec.spread;
        const double dv = 0.05 + 4.0 * rng.uniform();
        const double w = doppler_weight(v, dv, spec);
        const auto f = [&](double x) { return gauss_kernel(x, spec.mean_velocity, spec.spread); };
        const double q = integrate(f, v - 0.5 * dv, v + 0.5 * dv, 1e-14);
        const double rel = std::abs(w - q) / std::max(std::abs(q), 1e-12);
        worst = std::max(worst, rel);
        c.expect(rel <= 1e-10, "weight vs quadrature off by " + fmt(rel) + " at v " + fmt(v) +
                                   " dv " + fmt(dv) + " mu " + fmt(spec.mean_velocity) +
                                   " sd " + fmt(spec.spread) + " w " + fmt(w) + " q " + fmt(q));
    }

    if (c.ok) {
        // tiling cells over +-8 sigma must capture the full mass sigma*sqrt(2pi)
        DopplerSpectrum spec{-2.2, std::sqrt(5.0)};
        const double dv = 0.5 * spec.spread;
        const int half = 16; // 16 * (sigma/2) = 8 sigma each side
        double sum = 0.0;
        for (int i = -half; i <= half; ++i)
            sum += doppler_weight(spec.mean_velocity + dv * i, dv, spec);
        const double target = spec.spread * std::sqrt(2.0 * M_PI);
        const double rel = std::abs(sum - target) / target;
        c.expect(rel <= 1e-6, "partition sum off by " + fmt(rel));
        if (c.ok)
            c.detail = "40 quadrature probes (worst " + fmt(worst) + "), partition sum to " +
                       fmt(rel);
    }
    return c;
}

// ---- criterion 4 ------------------------------------------------------------

Check criterion_4() {
    Check c;

    // 32-pulse irregular train; long PRIs keep the velocity cells resolvable
    const cvec chirp = lfm_pulse(2e5, 20e-6, 5e5); // 10 samples
    Rng rng(0xF160ull);
    std::vector<double> starts =
        draw_irregular_pri(32, 500e-6, 800e-6, 5e5, rng);
    std::vector<cvec> pulses(32, chirp);
    const PulseTrain train = assemble_train(std::move(pulses), starts, 5e5, 1e10, block_len_auto);

    const std::vector<VelocitySegment> segs = {{-5.0, 0.0, 1.0}, {30.0, 40.0, 1.0}};
    const auto grid = RangeDopplerGrid::for_train(train, segs);
    const ClutterKernel kernel = uniform_kernel(grid);

    rvec designed;
    for (int k = 0; k < grid.n_velocities(); ++k) designed.push_back(grid.velocity(k));

    std::set<double> probe_set;
    for (const double v : designed) {
        probe_set.insert(v - 0.5);
        probe_set.insert(v);
        probe_set.insert(v + 0.5);
    }
    const rvec far = {6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0, 22.0, 24.0};
    for (const double v : far) probe_set.insert(v);
    const rvec probes(probe_set.begin(), probe_set.end());

    std::map<double, std::size_t> index;
    for (std::size_t i = 0; i < probes.size(); ++i) index[probes[i]] = i;

    const rvec lambdas = {1e-4, 1e-2, 1.0, 1e2};
    rvec mean_dip(lambdas.size(), 0.0);
    const int bin = grid.n_delays() / 2;

    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        FilterConfig cfg;
        cfg.lambda_c = lambdas[li];
        const rvec resp = filter_response_curve(train, grid, kernel, cfg, bin, probes);

        double far_mean = 0.0;
        for (const double v : far) far_mean += resp[index.at(v)];
        far_mean /= static_cast<double>(far.size());

        double dip_sum = 0.0;
        for (const double v : designed) {
            const double at = resp[index.at(v)];
            const double lo = resp[index.at(v - 0.5)];
            const double hi = resp[index.at(v + 0.5)];
            dip_sum += far_mean - at;
            if (li == 0) {
                if (!(at < lo && at < hi)) {
                    c.fail("no local minimum at " + fmt(v) + " m/s (" + fmt(at) + " vs " +
                           fmt(lo) + "/" + fmt(hi) + ")");
                    return c;
                }
                if (!(far_mean - at >= 20.0)) {
                    c.fail("dip at " + fmt(v) + " m/s only " + fmt(far_mean - at) +
                           " dB below the far mean");
                    return c;
                }
            }
        }
        mean_dip[li] = dip_sum / static_cast<double>(designed.size());
    }

    for (std::size_t li = 1; li < lambdas.size(); ++li)
        c.expect(mean_dip[li] <= mean_dip[li - 1] + 1e-9,
                 "dip depth not monotone: " + fmt(mean_dip[li - 1]) + " -> " +
                     fmt(mean_dip[li]) + " dB");
    if (c.ok)
        c.detail = "17 dips, mean depth " + fmt(mean_dip[0]) + " dB shrinking to " +
                   fmt(mean_dip.back()) + " dB";
    return c;
}

// ---- criterion 5 ------------------------------------------------------------

Config monte_carlo_config() {
    Config cfg = Config::parse(R"([waveform]
bandwidth_hz = 1e6
duration_us = 10
sample_rate_hz = 2e6
carrier_hz = 1e10
n_pulses = 8
pri_low_us = 65
pri_high_us = 100
block_len = 120

[kernel]
range_offset_m = 6430

[grid]
v_min_mps = -15
v_max_mps = 0
dv_mps = 4

[scene]
snr_db = 20

[solver]
max_iterations = 20000

[experiment]
n_pulses_list = 4, 8, 16
dv_list = 5, 3, 2.5
n_monte_carlo = 20
modes = none, identity, kernel
lambda_none_list = 0, 0, 0
lambda_identity_list = 0.06, 0.06, 0.06
lambda_kernel_list = 3.5e-3, 3.5e-3, 3.5e-3
)");
    return cfg;
}

Check criterion_5() {
    Check c;
    const BfrSweepResult res = run_bfr_sweep(monte_carlo_config(), 2026, 4);

    std::map<std::pair<int, std::string>, const CellAggregate*> cells;
    for (const auto& cell : res.cells) cells[{cell.n_pulses, cell.mode}] = &cell;

    std::string summary;
    double kern_disp = 0.0;
    double none_disp = 0.0;
    for (const int np : {4, 8, 16}) {
        const CellAggregate* none = cells.at({np, "none"});
        const CellAggregate* ident = cells.at({np, "identity"});
        const CellAggregate* kern = cells.at({np, "kernel"});
        c.expect(none->n_converged > 0 && ident->n_converged > 0 && kern->n_converged > 0,
                 "cell " + std::to_string(np) + ": no converged runs");
        c.expect(kern->mean >= ident->mean,
                 "cell " + std::to_string(np) + ": kernel mean " + fmt(kern->mean) +
                     " < identity mean " + fmt(ident->mean));
        c.expect(ident->mean >= none->mean,
                 "cell " + std::to_string(np) + ": identity mean " + fmt(ident->mean) +
                     " < none mean " + fmt(none->mean));
        kern_disp += kern->stddev;
        none_disp += none->stddev;
        summary += " N_p=" + std::to_string(np) + ": " + fmt(none->mean) + "/" +
                   fmt(ident->mean) + "/" + fmt(kern->mean) + "%";
        if (!c.ok) break;
    }
    // dispersion is a population property, not a per-cell race: compare the
    // typical error-bar size across cells
    c.expect(kern_disp / 3.0 <= none_disp / 3.0,
             "kernel dispersion " + fmt(kern_disp / 3.0) + " exceeds unregularized " +
                 fmt(none_disp / 3.0));
    if (c.ok)
        c.detail = "mean BFR none/identity/kernel:" + summary + "; dispersion " +
                   fmt(kern_disp / 3.0) + " vs " + fmt(none_disp / 3.0);
    return c;
}

// ---- criterion 6 ------------------------------------------------------------

Config masked_target_config() {
    return Config::parse(R"([waveform]
bandwidth_hz = 0.4e6
duration_us = 10
sample_rate_hz = 1e6
carrier_hz = 1e10
n_pulses = 32
pri_low_us = 200
pri_high_us = 300

[kernel]
range_offset_m = 6430
k_radar_wm2 = 1e15

[grid]
v_min_mps = -5
v_max_mps = 0
dv_mps = 2.5

[scene]
clutter = exponential
target_1 = 12425.84916, 25, 0.5, 0
target_2 = 24417.54748, 20, 0, 0.3

[solver]
lambda_c = 1e-3

[targets]
enabled = true
v_min_mps = 20
v_max_mps = 30
dv_mps = 5
n_iterations = 2
)");
}

Check criterion_6() {
    Check c;
    const TargetScenarioResult r = run_target_scenario(masked_target_config(), 31);

    if (r.true_cells.size() != 2) {
        c.fail("expected two true cells");
        return c;
    }
    const std::set<std::pair<int, int>> truth(r.true_cells.begin(), r.true_cells.end());

    const auto before = top_peaks(r.map_before, 10);
    for (const auto& p : before)
        c.expect(!truth.count(p), "target cell visible before filtering among the top-10 peaks");

    const auto after = top_peaks(r.map_after, 2);
    c.expect(after.size() == 2, "fewer than two peaks after filtering");
    if (after.size() == 2) {
        const std::set<std::pair<int, int>> got(after.begin(), after.end());
        c.expect(got == truth, "top-2 peaks after filtering are not the injected cells");
    }

    c.expect(r.estimates.size() == 2, "pursuit returned " +
                                          std::to_string(r.estimates.size()) +
                                          " targets, expected exactly 2");
    if (r.estimates.size() == 2) {
        std::set<std::pair<int, int>> got;
        for (const auto& e : r.estimates) got.insert({e.delay_bin, e.velocity_bin});
        c.expect(got == truth, "pursuit cells differ from the injected cells");
    }

    for (const double loss : r.losses_db) {
        c.expect(std::isfinite(loss), "peak power loss not finite");
        c.expect(loss > 0.0, "peak power loss not positive: " + fmt(loss));
    }
    if (c.ok)
        c.detail = "masked before, top-2 after; losses " + fmt(r.losses_db[0]) + " / " +
                   fmt(r.losses_db[1]) + " dB";
    return c;
}

// ---- criterion 7 ------------------------------------------------------------

Instance scaling_instance(int block_len, std::uint64_t seed) {
    Rng rng(seed);
    const int n = 32;
    const int m = 4;
    const double fs = 1e6;
    std::vector<cvec> pulses;
    std::vector<double> starts;
    std::int64_t start = 0;
    for (int i = 0; i < m; ++i) {
        cvec s(static_cast<std::size_t>(n));
        for (auto& z : s) z = rng.circular_gaussian(1.0);
        pulses.push_back(std::move(s));
        starts.push_back(static_cast<double>(start) / fs);
        start += block_len + 1 + static_cast<int>(rng.uniform() * 9.0);
    }
    PulseTrain train = assemble_train(std::move(pulses), starts, fs, 1e10, block_len);
    auto grid = RangeDopplerGrid::for_train(train, -12.0, 13.0, 5.0); // K = 6
    return {std::move(train), std::move(grid)};
}

Check criterion_7() {
    Check c;

    // exact transform budget, verified against the instrumented counters
    {
        const Instance inst = scaling_instance(512, 0xC07ull);
        fft::reset_counters();
        const ClutterOperator op(inst.train, inst.grid);
        const fft::Counts setup = fft::counters();
        const auto m = static_cast<std::uint64_t>(op.n_pulses());
        const auto k = static_cast<std::uint64_t>(op.n_velocities());
        c.expect(setup.forward == m && setup.inverse == 0,
                 "construction cost " + std::to_string(setup.forward) + "f/" +
                     std::to_string(setup.inverse) + "i, expected " + std::to_string(m) + "f/0i");

        ClutterKernel kernel = uniform_kernel(inst.grid);
        FilterConfig cfg;
        cfg.lambda_c = 1.0;
        Rng rng(0xC17ull);
        const cvec y = random_cvec(op.range_size(), rng);

        fft::reset_counters();
        const FilterOutput out = filter_clutter(y, op, kernel, cfg);
        const fft::Counts used = fft::counters();

        const auto na = static_cast<std::uint64_t>(out.n_apply);
        const auto np = static_cast<std::uint64_t>(out.n_precond);
        // adjoint (M+M) + applies (K+M each) + preconds (K+K each) + final
        // forward (K+M); per plain iteration that is 2K forward, M+K inverse
        const std::uint64_t expect_fwd = m + na * k + np * k + k;
        const std::uint64_t expect_inv = m + na * m + np * k + m;
        c.expect(used.forward == expect_fwd && used.inverse == expect_inv,
                 "solve cost " + std::to_string(used.forward) + "f/" +
                     std::to_string(used.inverse) + "i, budget " + std::to_string(expect_fwd) +
                     "f/" + std::to_string(expect_inv) + "i");
        c.expect(out.converged, "reference solve did not converge");
    }

    // wall-time scaling: doubling L at fixed M, K must stay near linearithmic
    if (c.ok) {
        const auto per_iter_time = [&](int block_len) {
            const Instance inst = scaling_instance(block_len, 0xC27ull);
            const ClutterOperator op(inst.train, inst.grid);
            ClutterKernel kernel = uniform_kernel(inst.grid);
            FilterConfig cfg;
            cfg.lambda_c = 1.0;
            Rng rng(0xC37ull);
            const cvec y = random_cvec(op.range_size(), rng);
            filter_clutter(y, op, kernel, cfg); // warm the plans and caches
            rvec samples;
            for (int trial = 0; trial < 5; ++trial) {
                const auto t0 = std::chrono::steady_clock::now();
                const FilterOutput out = filter_clutter(y, op, kernel, cfg);
                const auto t1 = std::chrono::steady_clock::now();
                const double sec = std::chrono::duration<double>(t1 - t0).count();
                samples.push_back(sec / std::max(1, out.n_apply));
            }
            std::sort(samples.begin(), samples.end());
            return samples[samples.size() / 2];
        };
        const double t512 = per_iter_time(512);
        const double t1024 = per_iter_time(1024);
        const double ratio = t1024 / t512;
        c.expect(ratio <= 2.4, "per-iteration time grew " + fmt(ratio) + "x for 2x block length");
        if (c.ok)
            c.detail = "budget exact; 2x block length costs " + fmt(ratio) + "x per iteration";
    }
    return c;
}

// ---- criterion 8 ------------------------------------------------------------

Check criterion_8() {
    Check c;
    const cvec ref = {{1.0, 0.0}, {-1.0, 0.0}};

    c.expect(bfr(ref, ref) == 100.0, "perfect estimate must score 100");

    cplx mean{0.0, 0.0};
    const cvec wide = {{3.0, 1.0}, {-1.0, 2.0}, {0.5, -4.0}};
    for (const auto& z : wide) mean += z;
    mean /= 3.0;
    const double at_mean = bfr(wide, cvec(3, mean));
    c.expect(std::abs(at_mean) <= 1e-12, "mean-constant estimate scored " + fmt(at_mean));

    const cvec halfway = {{0.5, 0.0}, {-0.5, 0.0}};
    c.expect(bfr(ref, halfway) == 50.0, "halfway estimate must score exactly 50");

    if (c.ok) c.detail = "100 / 0 / 50 endpoints exact";
    return c;
}

// ---- criterion 9 ------------------------------------------------------------

Config determinism_config() {
    Config cfg = Config::parse(R"([waveform]
bandwidth_hz = 0.4e6
duration_us = 5
sample_rate_hz = 1e6
carrier_hz = 1e10
n_pulses = 3
pri_low_us = 40
pri_high_us = 60

[kernel]
range_offset_m = 6000

[grid]
v_min_mps = -5
v_max_mps = 0
dv_mps = 2.5

[experiment]
n_pulses_list = 2, 3
dv_list = 5, 2.5
n_monte_carlo = 3
modes = none, identity, kernel
lambda_none_list = 0, 0
lambda_identity_list = 0.1, 0.1
lambda_kernel_list = 1e-4, 1e-4
lambda_list = 1e-3, 1
n_realizations = 2
probe_v_min_mps = -5
probe_v_max_mps = 0
probe_dv_mps = 2.5
)");
    return cfg;
}

Check criterion_9() {
    Check c;
    const Config cfg = determinism_config();

    const std::string sweep_a = bfr_runs_csv(run_bfr_sweep(cfg, 7, 1));
    const std::string sweep_b = bfr_runs_csv(run_bfr_sweep(cfg, 7, 4));
    c.expect(sweep_a == sweep_b, "bfr sweep differs between reruns");

    const std::string resp_a = response_curves_csv(run_response_study(cfg, 7, 1));
    const std::string resp_b = response_curves_csv(run_response_study(cfg, 7, 2));
    c.expect(resp_a == resp_b, "response study differs between reruns");

    Config tcfg = cfg;
    tcfg.set("targets", "enabled", "true");
    tcfg.set("targets", "v_min_mps", "20");
    tcfg.set("targets", "v_max_mps", "30");
    tcfg.set("targets", "dv_mps", "5");
    tcfg.set("scene", "target_1", "7498.96229, 25, 1, 0");
    const TargetScenarioResult ta = run_target_scenario(tcfg, 7);
    const TargetScenarioResult tb = run_target_scenario(tcfg, 7);
    c.expect(estimates_csv(ta, ta.constants, ta.train) == estimates_csv(tb, tb.constants, tb.train),
             "target estimates differ between reruns");
    c.expect(ta.map_after.power == tb.map_after.power, "maps differ between reruns");

    if (c.ok) c.detail = "sweep, response study and target scenario rerun bit-identical";
    return c;
}

// -----------------------------------------------------------------------------

struct Criterion {
    const char* label;
    std::function<Check()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::map<int, Criterion> criteria = {
        {1, {"matrix-free filter matches the dense solve", criterion_1}},
        {2, {"operator identities hold", criterion_2}},
        {3, {"kernel weights match quadrature", criterion_3}},
        {4, {"response dips at every designed velocity", criterion_4}},
        {5, {"regularization ordering in Monte Carlo BFR", criterion_5}},
        {6, {"masked targets recovered after filtering", criterion_6}},
        {7, {"transform budget exact, scaling linearithmic", criterion_7}},
        {8, {"best-fit-rate endpoint contract", criterion_8}},
        {9, {"reruns are bitwise identical", criterion_9}},
    };

    std::vector<int> which;
    if (argc > 1) {
        const int n = std::atoi(argv[1]);
        if (!criteria.count(n)) {
            std::fprintf(stderr, "usage: acceptance [1-9]\n");
            return 2;
        }
        which.push_back(n);
    } else {
        for (const auto& [n, cr] : criteria) which.push_back(n);
    }

    bool all_ok = true;
    for (const int n : which) {
        const auto& cr = criteria.at(n);
        Check c;
        try {
            c = cr.run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s%s%s\n", c.ok ? "PASS" : "FAIL", n, cr.label,
                    c.detail.empty() ? "" : " -- ", c.detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && c.ok;
    }
    return all_ok ? 0 : 1;
}
