#pragma once

#include <atomic>
#include <cctype>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "kcf/metrics.hpp"
#include "kcf/scenario.hpp"
#include "kcf/targets.hpp"

namespace kcf {

struct RunRecord {
    int n_pulses = 0;
    std::string mode;
    int run_index = 0;
    std::uint64_t seed = 0;
    std::uint64_t pri_hash = 0;
    double lambda_c = 0.0;
    double bfr_percent = 0.0;
    double mse_value = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct CellAggregate {
    int n_pulses = 0;
    std::string mode;
    double lambda_c = 0.0;
    int n_runs = 0;
    int n_converged = 0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation over converged runs
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

struct BfrSweepResult {
    std::vector<RunRecord> runs;
    std::vector<CellAggregate> cells;
    int n_excluded = 0; // non-converged runs, reported and left out of stats
};

namespace harness_detail {

inline void run_tasks(std::size_t n_tasks, int threads, const std::function<void(std::size_t)>& f) {
    if (threads <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(n_tasks));
    pool.reserve(static_cast<std::size_t>(n));
    std::mutex error_mutex;
    std::exception_ptr error;
    for (int t = 0; t < n; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

/// Quartiles by linear interpolation on the sorted sample.
inline double quantile(const rvec& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double w = pos - std::floor(pos);
    return sorted[lo] * (1.0 - w) + sorted[hi] * w;
}

} // namespace harness_detail

/// Monte Carlo over (n_pulses cell) x (regularization mode) x (run). One seed
/// per (cell, run) pair: the three modes see the same PRI, clutter and noise
/// realization, so the mode comparison is paired.
inline BfrSweepResult run_bfr_sweep(const Config& base, std::uint64_t base_seed,
                                    int threads = 1) {
    Config cfg = base;
    validate_schema(cfg);
    resolve_defaults(cfg);
    require_sections(cfg, {"waveform", "grid"});

    const rvec np_list = cfg.get_list("experiment", "n_pulses_list");
    const rvec dv_list = cfg.get_list("experiment", "dv_list");
    if (np_list.size() != dv_list.size())
        throw config_error("experiment: n_pulses_list and dv_list lengths differ");
    const auto n_mc = static_cast<int>(cfg.get_int("experiment", "n_monte_carlo"));
    if (n_mc < 1) throw config_error("experiment.n_monte_carlo must be >= 1");
    const BfrNorm norm = cfg.get("experiment", "bfr_norm") == "aggregate_l2"
                             ? BfrNorm::aggregate_l2
                             : BfrNorm::per_sample;

    std::vector<std::string> modes;
    {
        std::istringstream in(cfg.get("experiment", "modes"));
        std::string item;
        while (std::getline(in, item, ',')) {
            std::string t;
            for (char c : item)
                if (!std::isspace(static_cast<unsigned char>(c))) t += c;
            if (!t.empty()) modes.push_back(t);
        }
    }
    if (modes.empty()) throw config_error("experiment.modes is empty");

    std::map<std::string, rvec> lambdas;
    for (const auto& mode : modes) {
        parse_reg_mode(mode);
        const rvec l = cfg.get_list("experiment", "lambda_" + mode + "_list");
        if (l.size() != np_list.size())
            throw config_error("experiment.lambda_" + mode +
                               "_list must align with n_pulses_list");
        lambdas[mode] = l;
    }

    struct Task {
        std::size_t cell;
        int run;
        std::size_t mode;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < np_list.size(); ++c)
        for (int r = 0; r < n_mc; ++r)
            for (std::size_t m = 0; m < modes.size(); ++m) tasks.push_back({c, r, m});

    BfrSweepResult result;
    result.runs.resize(tasks.size());

    harness_detail::run_tasks(tasks.size(), threads, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        const auto n_pulses = static_cast<int>(np_list[task.cell]);
        const std::string& mode = modes[task.mode];
        const double lambda = lambdas.at(mode)[task.cell];

        Config run_cfg = cfg;
        run_cfg.set("waveform", "n_pulses", std::to_string(n_pulses));
        if (run_cfg.has("grid", "segments"))
            throw config_error("experiment: the sweep varies dv_mps, segments grids cannot");
        run_cfg.set("grid", "dv_mps", format_g17(dv_list[task.cell]));
        run_cfg.set("solver", "reg_mode", mode);
        run_cfg.set("solver", "lambda_c", format_g17(lambda));

        // same seed for every mode: paired comparison
        const std::uint64_t seed =
            derive_seed(base_seed, task.cell + 1, static_cast<std::uint64_t>(task.run) + 1);
        const ScenarioObjects s = build_scenario(run_cfg, seed);

        const cvec truth = synthesize_clutter(s.train, s.grid, s.scene.clutter_coeffs, s.model);
        const cvec y = synthesize_received(s.train, s.grid, s.scene, s.model);
        const ClutterOperator op(s.train, s.grid);
        const FilterOutput out = filter_clutter(y, op, s.reg_kernel, s.filter);

        RunRecord rec;
        rec.n_pulses = n_pulses;
        rec.mode = mode;
        rec.run_index = task.run;
        rec.seed = seed;
        rec.pri_hash = pri_hash(s.train);
        rec.lambda_c = s.filter.lambda_c;
        rec.bfr_percent = bfr(truth, out.clutter_estimate, norm);
        rec.mse_value = mse(truth, out.clutter_estimate);
        rec.iterations = out.iterations;
        rec.converged = out.converged;
        result.runs[ti] = std::move(rec);
    });

    for (std::size_t c = 0; c < np_list.size(); ++c)
        for (std::size_t m = 0; m < modes.size(); ++m) {
            CellAggregate agg;
            agg.n_pulses = static_cast<int>(np_list[c]);
            agg.mode = modes[m];
            agg.lambda_c = modes[m] == "none" ? 0.0 : lambdas.at(modes[m])[c];
            rvec values;
            for (const auto& run : result.runs) {
                if (run.n_pulses != agg.n_pulses || run.mode != agg.mode) continue;
                ++agg.n_runs;
                if (!run.converged) continue;
                values.push_back(run.bfr_percent);
            }
            agg.n_converged = static_cast<int>(values.size());
            result.n_excluded += agg.n_runs - agg.n_converged;
            if (!values.empty()) {
                double sum = 0.0;
                for (double v : values) sum += v;
                agg.mean = sum / static_cast<double>(values.size());
                double ss = 0.0;
                for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
                agg.stddev = values.size() > 1
                                 ? std::sqrt(ss / static_cast<double>(values.size() - 1))
                                 : 0.0;
                std::sort(values.begin(), values.end());
                agg.q1 = harness_detail::quantile(values, 0.25);
                agg.median = harness_detail::quantile(values, 0.5);
                agg.q3 = harness_detail::quantile(values, 0.75);
            }
            result.cells.push_back(std::move(agg));
        }
    return result;
}

struct ResponseCurve {
    double lambda_c = 0.0;
    int realization = 0;
    std::uint64_t pri_hash = 0;
    rvec velocities;
    rvec response_db;
};

/// Filter response study: unit-probe response curves for each lambda in the
/// sweep list and each PRI realization. The scene section is ignored; probes
/// are synthesized internally.
inline std::vector<ResponseCurve> run_response_study(const Config& base, std::uint64_t base_seed,
                                                     int threads = 1) {
    Config cfg = base;
    validate_schema(cfg);
    resolve_defaults(cfg);
    require_sections(cfg, {"waveform", "grid"});
    cfg.set("scene", "clutter", "none"); // probes only, no scene draw

    const rvec lambda_list = cfg.get_list("experiment", "lambda_list");
    if (lambda_list.empty()) throw config_error("experiment.lambda_list is empty");
    const auto n_real = static_cast<int>(cfg.get_int("experiment", "n_realizations"));
    if (n_real < 1) throw config_error("experiment.n_realizations must be >= 1");
    const double pv_min = cfg.get_double("experiment", "probe_v_min_mps");
    const double pv_max = cfg.get_double("experiment", "probe_v_max_mps");
    const double pv_dv = cfg.get_double("experiment", "probe_dv_mps");
    if (pv_dv <= 0.0 || pv_max < pv_min) throw config_error("experiment: bad probe grid");

    rvec probes;
    for (int i = 0;; ++i) {
        const double v = pv_min + pv_dv * i;
        if (v > pv_max + 1e-9 * pv_dv) break;
        probes.push_back(v);
    }

    std::vector<ResponseCurve> curves(lambda_list.size() * static_cast<std::size_t>(n_real));
    harness_detail::run_tasks(curves.size(), threads, [&](std::size_t ti) {
        const std::size_t li = ti / static_cast<std::size_t>(n_real);
        const int real = static_cast<int>(ti % static_cast<std::size_t>(n_real));

        Config run_cfg = cfg;
        run_cfg.set("solver", "lambda_c", format_g17(lambda_list[li]));
        const std::uint64_t seed = derive_seed(base_seed, 0x5E, static_cast<std::uint64_t>(real));
        const ScenarioObjects s = build_scenario(run_cfg, seed);

        int bin = static_cast<int>(cfg.get_int("experiment", "response_bin"));
        if (bin < 0) bin = s.grid.n_delays() / 2;
        if (bin >= s.grid.n_delays())
            throw config_error("experiment.response_bin outside the range window");

        ResponseCurve curve;
        curve.lambda_c = s.filter.lambda_c;
        curve.realization = real;
        curve.pri_hash = pri_hash(s.train);
        curve.velocities = probes;
        curve.response_db =
            filter_response_curve(s.train, s.grid, s.reg_kernel, s.filter, bin, probes);
        curves[ti] = std::move(curve);
    });
    return curves;
}

struct TargetScenarioResult {
    RangeDopplerMap map_before;    // matched filter of the cluttered input
    RangeDopplerMap map_after;     // matched filter of the filtered output
    RangeDopplerMap map_reference; // matched filter of the clean target-only signal
    std::vector<TargetEstimate> estimates;
    std::vector<std::pair<int, int>> true_cells; // target grid cells of the scene targets
    rvec losses_db;                              // per scene target, reference vs after
    FilterOutput filter;
    RangeDopplerGrid target_grid;
    PulseTrain train;
    RadarConstants constants;
    std::uint64_t pri_hash = 0;
};

/// The weak-target study: synthesize clutter + targets + noise, filter, map
/// before and after, run the pursuit, score peak power loss per true target
/// against the clutter-free reference map.
inline TargetScenarioResult run_target_scenario(const Config& base, std::uint64_t seed) {
    Config cfg = base;
    validate_schema(cfg);
    resolve_defaults(cfg);
    require_sections(cfg, {"waveform", "grid"});

    const ScenarioObjects s = build_scenario(cfg, seed);
    if (!s.targets_enabled)
        throw config_error("targets.enabled must be true for the target scenario");
    if (s.scene.targets.empty()) throw config_error("scene: no targets configured");

    // Clutter synthesizes against its own grid, targets against theirs: the
    // per_pulse model snaps each scatterer to the grid it is given, and a
    // fast target must never be pulled into the clutter band. Noise is drawn
    // once, with the target pass.
    Scene clutter_only = s.scene;
    clutter_only.targets.clear();
    clutter_only.noise_variance = 0.0;
    Scene targets_only = s.scene;
    targets_only.clutter_coeffs.clear();
    cvec y = synthesize_received(s.train, s.grid, clutter_only, s.model);
    const cvec y_targets = synthesize_received(s.train, s.target_grid, targets_only, s.model);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += y_targets[i];
    const ClutterOperator clutter_op(s.train, s.grid);
    const ClutterOperator target_op(s.train, s.target_grid);

    TargetScenarioResult r;
    r.target_grid = s.target_grid;
    r.train = s.train;
    r.constants = s.constants;
    r.pri_hash = pri_hash(s.train);
    r.filter = filter_clutter(y, clutter_op, s.reg_kernel, s.filter);
    r.map_before = matched_filter_map(y, target_op);
    r.map_after = matched_filter_map(r.filter.y_filt, target_op);

    Scene clean;
    clean.targets = s.scene.targets;
    const cvec y_clean = synthesize_received(s.train, s.target_grid, clean, s.model);
    r.map_reference = matched_filter_map(y_clean, target_op);

    r.estimates = estimate_targets(r.filter.y_filt, target_op, s.target_grid,
                                   s.target_iterations, s.target_threshold_db);

    for (const auto& t : s.scene.targets) {
        const auto j = static_cast<int>(std::llround(t.delay * s.train.sample_rate));
        int k = 0;
        for (int kk = 1; kk < s.target_grid.n_velocities(); ++kk)
            if (std::abs(t.velocity - s.target_grid.velocity(kk)) <
                std::abs(t.velocity - s.target_grid.velocity(k)))
                k = kk;
        r.true_cells.emplace_back(j, k);
        const double loss = peak_power_loss(r.map_reference, r.map_after, j, k);
        r.losses_db.push_back(loss);
        for (auto& est : r.estimates)
            if (est.delay_bin == j && est.velocity_bin == k) est.loss_db = loss;
    }
    return r;
}

// CSV / manifest emission ----------------------------------------------------

inline std::string bfr_runs_csv(const BfrSweepResult& result) {
    std::string out =
        "n_pulses,mode,run,seed,pri_hash,lambda_c,bfr_percent,mse,iterations,converged\n";
    for (const auto& r : result.runs) {
        out += std::to_string(r.n_pulses) + "," + r.mode + "," + std::to_string(r.run_index) +
               "," + std::to_string(r.seed) + "," + std::to_string(r.pri_hash) + "," +
               format_g17(r.lambda_c) + "," + format_g17(r.bfr_percent) + "," +
               format_g17(r.mse_value) + "," + std::to_string(r.iterations) + "," +
               (r.converged ? "1" : "0") + "\n";
    }
    return out;
}

inline std::string bfr_aggregate_csv(const BfrSweepResult& result) {
    std::string out = "n_pulses,mode,lambda_c,n_runs,n_converged,mean,stddev,q1,median,q3\n";
    for (const auto& c : result.cells) {
        out += std::to_string(c.n_pulses) + "," + c.mode + "," + format_g17(c.lambda_c) + "," +
               std::to_string(c.n_runs) + "," + std::to_string(c.n_converged) + "," +
               format_g17(c.mean) + "," + format_g17(c.stddev) + "," + format_g17(c.q1) + "," +
               format_g17(c.median) + "," + format_g17(c.q3) + "\n";
    }
    return out;
}

inline std::string response_curves_csv(const std::vector<ResponseCurve>& curves) {
    std::string out = "lambda_c,realization,pri_hash,velocity_mps,response_db\n";
    for (const auto& c : curves)
        for (std::size_t i = 0; i < c.velocities.size(); ++i)
            out += format_g17(c.lambda_c) + "," + std::to_string(c.realization) + "," +
                   std::to_string(c.pri_hash) + "," + format_g17(c.velocities[i]) + "," +
                   format_g17(c.response_db[i]) + "\n";
    return out;
}

inline std::string estimates_csv(const TargetScenarioResult& r, const RadarConstants& consts,
                                 const PulseTrain& train) {
    std::string out =
        "delay_bin,velocity_bin,range_m,velocity_mps,amplitude_re,amplitude_im,power_db,"
        "loss_db\n";
    for (const auto& e : r.estimates) {
        const double range =
            0.5 * speed_of_light * (static_cast<double>(e.delay_bin) / train.sample_rate) +
            consts.range_offset;
        out += std::to_string(e.delay_bin) + "," + std::to_string(e.velocity_bin) + "," +
               format_g17(range) + "," + format_g17(e.velocity) + "," +
               format_g17(e.amplitude.real()) + "," + format_g17(e.amplitude.imag()) + "," +
               format_g17(e.power_db) + "," + format_g17(e.loss_db) + "\n";
    }
    return out;
}

inline std::string residual_history_csv(const FilterOutput& out) {
    std::string s = "iter,resid_norm\n";
    for (std::size_t i = 0; i < out.residual_history.size(); ++i)
        s += std::to_string(i) + "," + format_g17(out.residual_history[i]) + "\n";
    return s;
}

/// The manifest is the resolved config (every default explicit) plus comment
/// lines recording how the run was invoked; feeding it back in reproduces the
/// run bit for bit.
inline void write_manifest(const std::string& path, Config cfg, const std::string& command,
                           std::uint64_t seed) {
    validate_schema(cfg);
    resolve_defaults(cfg);
    std::string out;
    out += "# kcf manifest\n";
    out += "# command = " + command + "\n";
    out += "# seed = " + std::to_string(seed) + "\n";
    out += cfg.serialize();
    write_text(path, out);
}

} // namespace kcf
