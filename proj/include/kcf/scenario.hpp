#pragma once

#include <cctype>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>

#include "kcf/config.hpp"
#include "kcf/io.hpp"
#include "kcf/kernel.hpp"
#include "kcf/scene.hpp"
#include "kcf/solver.hpp"
#include "kcf/waveform.hpp"

namespace kcf {

enum class RegMode { none, identity, kernel };

inline const char* to_string(RegMode m) {
    switch (m) {
        case RegMode::none: return "none";
        case RegMode::identity: return "identity";
        default: return "kernel";
    }
}

inline RegMode parse_reg_mode(const std::string& s) {
    if (s == "none") return RegMode::none;
    if (s == "identity") return RegMode::identity;
    if (s == "kernel") return RegMode::kernel;
    throw config_error("unknown regularization mode: '" + s + "'");
}

/// Everything a single filtering run needs, bound from one config document.
struct ScenarioObjects {
    PulseTrain train;
    RangeDopplerGrid grid; // clutter dictionary grid
    RadarConstants constants;
    DopplerSpectrum spectrum;
    ClutterKernel physical_kernel; // scene statistics (empty unless needed)
    ClutterKernel reg_kernel;      // regularizer weights per reg_mode
    RegMode reg_mode = RegMode::kernel;
    Scene scene;
    SignalModel model = SignalModel::per_pulse;
    FilterConfig filter;
    bool targets_enabled = false;
    RangeDopplerGrid target_grid;
    int target_iterations = 2;
    double target_threshold_db = 13.0;
};

namespace scenario_detail {

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"waveform",
         {"type", "bandwidth_hz", "duration_us", "sample_rate_hz", "carrier_hz", "n_pulses",
          "pri_mode", "pri_low_us", "pri_high_us", "pri_us", "block_len"}},
        {"grid", {"v_min_mps", "v_max_mps", "dv_mps", "segments"}},
        {"kernel",
         {"k_radar_wm2", "grazing_deg", "beaufort", "beamwidth_deg", "range_offset_m",
          "doppler_mean_mps", "doppler_std_mps", "floor_rel"}},
        {"scene", {"clutter", "model", "seed", "snr_db", "noise_variance"}},
        {"solver",
         {"reg_mode", "lambda_c", "abs_tol", "rel_tol", "max_iterations", "preconditioner",
          "check_hermitian", "reproducible"}},
        {"targets",
         {"enabled", "v_min_mps", "v_max_mps", "dv_mps", "segments", "n_iterations",
          "threshold_db"}},
        {"experiment",
         {"out_dir", "base_seed", "n_monte_carlo", "n_pulses_list", "dv_list", "modes",
          "lambda_none_list", "lambda_identity_list", "lambda_kernel_list", "lambda_list",
          "n_realizations", "probe_v_min_mps", "probe_v_max_mps", "probe_dv_mps",
          "response_bin", "bfr_norm"}},
    };
    return s;
}

inline bool is_target_key(const std::string& key) {
    if (key.rfind("target_", 0) != 0) return false;
    const std::string tail = key.substr(7);
    if (tail.empty()) return false;
    for (char c : tail)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

} // namespace scenario_detail

/// Reject unknown sections and keys outright; unit mistakes should fail the
/// parse, not silently produce a default.
inline void validate_schema(const Config& cfg) {
    const auto& schema = scenario_detail::schema();
    for (const auto& section : cfg.sections()) {
        const auto it = schema.find(section.name);
        if (it == schema.end()) throw config_error("unknown section: " + section.name);
        for (const auto& entry : section.entries) {
            if (it->second.count(entry.key)) continue;
            if (section.name == "scene" && scenario_detail::is_target_key(entry.key)) continue;
            throw config_error("unknown key: " + section.name + "." + entry.key);
        }
    }
}

inline void require_sections(const Config& cfg, std::initializer_list<const char*> names) {
    for (const char* n : names)
        if (!cfg.has_section(n)) throw config_error(std::string("missing section: ") + n);
}

/// Make every default explicit, so the manifest echo of the config is the
/// complete record of the run. Required keys (waveform physics, grid extents)
/// stay absent and fail later with a named missing-key error.
inline void resolve_defaults(Config& cfg) {
    cfg.set_default("waveform", "type", "lfm");
    cfg.set_default("waveform", "pri_mode", "irregular");
    cfg.set_default("waveform", "block_len", "auto");

    cfg.set_default("kernel", "k_radar_wm2", "2.5e10");
    cfg.set_default("kernel", "grazing_deg", "90");
    cfg.set_default("kernel", "beaufort", "5");
    cfg.set_default("kernel", "beamwidth_deg", "4");
    cfg.set_default("kernel", "range_offset_m", "0");
    cfg.set_default("kernel", "doppler_mean_mps", "-2.2");
    cfg.set_default("kernel", "doppler_std_mps", format_g17(std::sqrt(5.0)));
    cfg.set_default("kernel", "floor_rel", "1e-30");

    cfg.set_default("scene", "clutter", "gaussian");
    cfg.set_default("scene", "model", "per_pulse");
    cfg.set_default("scene", "seed", "1");
    if (!cfg.has("scene", "snr_db")) cfg.set_default("scene", "noise_variance", "0");

    cfg.set_default("solver", "reg_mode", "kernel");
    cfg.set_default("solver", "lambda_c", "1");
    cfg.set_default("solver", "abs_tol", "1e-13");
    cfg.set_default("solver", "rel_tol", "1e-10");
    cfg.set_default("solver", "max_iterations", "0");
    cfg.set_default("solver", "preconditioner", "block_circulant");
    cfg.set_default("solver", "check_hermitian", "false");
    cfg.set_default("solver", "reproducible", "true");

    cfg.set_default("targets", "enabled", "false");
    cfg.set_default("targets", "n_iterations", "2");
    cfg.set_default("targets", "threshold_db", "13");
    // target grid falls back to the clutter grid spec
    if (!cfg.has("targets", "segments") && !cfg.has("targets", "v_min_mps") &&
        cfg.has_section("grid")) {
        for (const char* key : {"v_min_mps", "v_max_mps", "dv_mps", "segments"})
            if (cfg.has("grid", key)) cfg.set("targets", key, cfg.get("grid", key));
    }

    cfg.set_default("experiment", "out_dir", "results");
    cfg.set_default("experiment", "base_seed", "1");
    cfg.set_default("experiment", "n_monte_carlo", "20");
    cfg.set_default("experiment", "n_pulses_list", "4, 8, 16");
    cfg.set_default("experiment", "dv_list", "7.5, 4, 2");
    cfg.set_default("experiment", "modes", "none, identity, kernel");
    cfg.set_default("experiment", "lambda_none_list", "0, 0, 0");
    cfg.set_default("experiment", "lambda_identity_list", "90, 350, 400");
    cfg.set_default("experiment", "lambda_kernel_list", "10, 12, 14");
    cfg.set_default("experiment", "lambda_list", "1e-4, 1e-2, 1, 100");
    cfg.set_default("experiment", "n_realizations", "1");
    cfg.set_default("experiment", "probe_v_min_mps", "-10");
    cfg.set_default("experiment", "probe_v_max_mps", "45");
    cfg.set_default("experiment", "probe_dv_mps", "0.25");
    cfg.set_default("experiment", "response_bin", "-1");
    cfg.set_default("experiment", "bfr_norm", "per_sample");
}

inline PulseTrain build_train(const Config& cfg, std::uint64_t seed) {
    require_sections(cfg, {"waveform"});
    const std::string type = cfg.get("waveform", "type");
    if (type != "lfm") throw config_error("waveform.type: only 'lfm' is supported, got " + type);

    const double bandwidth = cfg.get_double("waveform", "bandwidth_hz");
    const double duration = cfg.get_double("waveform", "duration_us") * 1e-6;
    const double fs = cfg.get_double("waveform", "sample_rate_hz");
    const double fc = cfg.get_double("waveform", "carrier_hz");
    const auto n_pulses = static_cast<int>(cfg.get_int("waveform", "n_pulses"));
    if (n_pulses < 1) throw config_error("waveform.n_pulses must be >= 1");

    const cvec chirp = lfm_pulse(bandwidth, duration, fs);
    std::vector<cvec> pulses(static_cast<std::size_t>(n_pulses), chirp);

    std::vector<double> starts;
    const std::string pri_mode = cfg.get("waveform", "pri_mode");
    if (pri_mode == "irregular") {
        Rng rng(derive_seed(seed, 0xA));
        starts = draw_irregular_pri(n_pulses, cfg.get_double("waveform", "pri_low_us") * 1e-6,
                                    cfg.get_double("waveform", "pri_high_us") * 1e-6, fs, rng);
    } else if (pri_mode == "regular") {
        const double pri = cfg.get_double("waveform", "pri_us") * 1e-6;
        if (pri <= 0.0) throw config_error("waveform.pri_us must be positive");
        starts.resize(static_cast<std::size_t>(n_pulses));
        const auto step = static_cast<std::int64_t>(std::llround(pri * fs));
        for (int m = 0; m < n_pulses; ++m)
            starts[static_cast<std::size_t>(m)] = static_cast<double>(step * m) / fs;
    } else {
        throw config_error("waveform.pri_mode: expected irregular or regular, got " + pri_mode);
    }

    int block_len = block_len_auto;
    const std::string bl = cfg.get("waveform", "block_len");
    if (bl != "auto") {
        try {
            std::size_t pos = 0;
            block_len = std::stoi(bl, &pos);
            if (pos != bl.size()) throw std::invalid_argument(bl);
        } catch (const std::exception&) {
            throw config_error("waveform.block_len: expected 'auto' or an integer, got " + bl);
        }
    }
    return assemble_train(std::move(pulses), starts, fs, fc, block_len);
}

inline std::vector<VelocitySegment> parse_segments(const std::string& raw,
                                                   const std::string& where) {
    std::vector<VelocitySegment> segs;
    std::istringstream in(raw);
    std::string part;
    while (std::getline(in, part, ';')) {
        double v[3];
        int i = 0;
        std::istringstream ps(part);
        std::string field;
        while (std::getline(ps, field, ':')) {
            if (i >= 3) throw config_error(where + ": segment needs v0:v1:dv, got '" + part + "'");
            try {
                std::size_t pos = 0;
                v[i] = std::stod(field, &pos);
                while (pos < field.size() &&
                       std::isspace(static_cast<unsigned char>(field[pos])))
                    ++pos;
                if (pos != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw config_error(where + ": bad segment number '" + field + "'");
            }
            ++i;
        }
        if (i != 3) throw config_error(where + ": segment needs v0:v1:dv, got '" + part + "'");
        segs.push_back({v[0], v[1], v[2]});
    }
    if (segs.empty()) throw config_error(where + ": empty segment list");
    return segs;
}

inline RangeDopplerGrid build_grid(const Config& cfg, const PulseTrain& train,
                                   const std::string& section) {
    require_sections(cfg, {section.c_str()});
    const bool has_segments = cfg.has(section, "segments");
    const bool has_uniform = cfg.has(section, "v_min_mps") || cfg.has(section, "v_max_mps") ||
                             cfg.has(section, "dv_mps");
    if (has_segments && has_uniform)
        throw config_error(section + ": give either segments or v_min/v_max/dv, not both");
    try {
        if (has_segments)
            return RangeDopplerGrid::for_train(
                train, parse_segments(cfg.get(section, "segments"), section));
        return RangeDopplerGrid::for_train(train, cfg.get_double(section, "v_min_mps"),
                                           cfg.get_double(section, "v_max_mps"),
                                           cfg.get_double(section, "dv_mps"));
    } catch (const invalid_argument_error& e) {
        throw config_error(section + ": " + e.what());
    }
}

inline RadarConstants build_constants(const Config& cfg) {
    RadarConstants c{};
    c.k_radar = cfg.get_double("kernel", "k_radar_wm2");
    c.wavelength = speed_of_light / cfg.get_double("waveform", "carrier_hz");
    c.beamwidth = cfg.get_double("kernel", "beamwidth_deg") * M_PI / 180.0;
    c.grazing_angle = cfg.get_double("kernel", "grazing_deg") * M_PI / 180.0;
    c.beaufort = cfg.get_double("kernel", "beaufort");
    c.range_offset = cfg.get_double("kernel", "range_offset_m");
    c.range_resolution = speed_of_light / (2.0 * cfg.get_double("waveform", "bandwidth_hz"));
    return c;
}

inline DopplerSpectrum build_spectrum(const Config& cfg) {
    return {cfg.get_double("kernel", "doppler_mean_mps"),
            cfg.get_double("kernel", "doppler_std_mps")};
}

inline FilterConfig build_filter_config(const Config& cfg) {
    FilterConfig f;
    f.lambda_c = cfg.get_double("solver", "lambda_c");
    f.pcg_abs_tol = cfg.get_double("solver", "abs_tol");
    f.pcg_rel_tol = cfg.get_double("solver", "rel_tol");
    f.max_iterations = static_cast<int>(cfg.get_int("solver", "max_iterations"));
    const std::string pre = cfg.get("solver", "preconditioner");
    if (pre == "none")
        f.preconditioner = Preconditioner::none;
    else if (pre == "block_circulant")
        f.preconditioner = Preconditioner::block_circulant;
    else
        throw config_error("solver.preconditioner: expected none or block_circulant, got " + pre);
    f.check_hermitian = cfg.get_bool("solver", "check_hermitian");
    f.reproducible_reduction = cfg.get_bool("solver", "reproducible");
    if (parse_reg_mode(cfg.get("solver", "reg_mode")) == RegMode::none) f.lambda_c = 0.0;
    try {
        f.validate();
    } catch (const invalid_argument_error& e) {
        throw config_error(std::string("solver: ") + e.what());
    }
    return f;
}

/// Bind one complete run. The seed drives three independent streams: PRI
/// draw, clutter coefficients, receiver noise.
inline ScenarioObjects build_scenario(Config cfg, std::uint64_t seed) {
    validate_schema(cfg);
    resolve_defaults(cfg);
    require_sections(cfg, {"waveform", "grid"});

    ScenarioObjects s;
    s.train = build_train(cfg, seed);
    s.grid = build_grid(cfg, s.train, "grid");
    s.constants = build_constants(cfg);
    s.spectrum = build_spectrum(cfg);
    s.reg_mode = parse_reg_mode(cfg.get("solver", "reg_mode"));
    s.filter = build_filter_config(cfg);

    const std::string model = cfg.get("scene", "model");
    if (model == "per_pulse")
        s.model = SignalModel::per_pulse;
    else if (model == "full")
        s.model = SignalModel::full;
    else
        throw config_error("scene.model: expected per_pulse or full, got " + model);

    const std::string clutter = cfg.get("scene", "clutter");
    if (clutter != "gaussian" && clutter != "exponential" && clutter != "none")
        throw config_error("scene.clutter: expected gaussian, exponential or none, got " +
                           clutter);

    const bool needs_physical = clutter != "none" || s.reg_mode == RegMode::kernel;
    if (needs_physical) {
        try {
            s.physical_kernel = build_kernel(s.grid, s.constants, s.spectrum, {},
                                             cfg.get_double("kernel", "floor_rel"));
        } catch (const invalid_argument_error& e) {
            throw config_error(std::string("kernel: ") + e.what());
        }
    }
    s.reg_kernel = s.reg_mode == RegMode::kernel ? s.physical_kernel : uniform_kernel(s.grid);

    if (clutter != "none") {
        Rng rng(derive_seed(seed, 0xB));
        s.scene.clutter_coeffs = clutter == "gaussian"
                                     ? draw_clutter_gaussian(s.physical_kernel, rng)
                                     : draw_clutter_exponential(s.physical_kernel, rng);
    }

    for (const auto& section : cfg.sections()) {
        if (section.name != "scene") continue;
        for (const auto& entry : section.entries) {
            if (!scenario_detail::is_target_key(entry.key)) continue;
            const rvec f = cfg.get_list("scene", entry.key);
            if (f.size() != 4)
                throw config_error("scene." + entry.key +
                                   ": expected range_m, velocity_mps, amp_re, amp_im");
            const double delay = 2.0 * (f[0] - s.constants.range_offset) / speed_of_light;
            if (delay < 0.0)
                throw config_error("scene." + entry.key + ": range is inside the range offset");
            s.scene.targets.push_back({delay, f[1], cplx{f[2], f[3]}});
        }
    }

    s.scene.rng_seed = derive_seed(seed, 0xC);
    if (cfg.has("scene", "snr_db")) {
        if (cfg.has("scene", "noise_variance"))
            throw config_error("scene: give snr_db or noise_variance, not both");
        try {
            s.scene.noise_variance = noise_variance_for_snr(
                s.train, s.grid, s.scene, s.model, cfg.get_double("scene", "snr_db"));
        } catch (const invalid_argument_error& e) {
            throw config_error(std::string("scene.snr_db: ") + e.what());
        }
    } else {
        s.scene.noise_variance = cfg.get_double("scene", "noise_variance");
        if (s.scene.noise_variance < 0.0)
            throw config_error("scene.noise_variance must be non-negative");
    }

    s.targets_enabled = cfg.get_bool("targets", "enabled");
    if (s.targets_enabled) {
        s.target_grid = build_grid(cfg, s.train, "targets");
        s.target_iterations = static_cast<int>(cfg.get_int("targets", "n_iterations"));
        s.target_threshold_db = cfg.get_double("targets", "threshold_db");
        if (s.target_iterations < 1) throw config_error("targets.n_iterations must be >= 1");
    }
    return s;
}

} // namespace kcf
