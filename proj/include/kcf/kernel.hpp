#pragma once

#include "kcf/common.hpp"
#include "kcf/grid.hpp"

namespace kcf {

/// Physical constants of the radar range equation plus scene geometry.
/// k_radar collapses P_t G lambda^2 / ((4 pi)^3 L_s) into one factor.
struct RadarConstants {
    double k_radar;          // W m^2
    double wavelength;       // m
    double beamwidth;        // rad, azimuth extent of a range bin
    double grazing_angle;    // rad
    double beaufort;         // wind-scale constant K_b
    double range_offset = 0.0;      // m, added to c*tau/2 to form absolute range
    double range_resolution = 0.0;  // m, bin depth; typically c/(2B)

    void validate() const {
        require(k_radar > 0.0, "kernel: k_radar must be positive");
        require(wavelength > 0.0, "kernel: wavelength must be positive");
        require(beamwidth > 0.0 && beamwidth < 2.0 * M_PI, "kernel: beamwidth out of range");
        require(range_resolution > 0.0, "kernel: range_resolution must be positive");
    }
};

/// Gaussian clutter Doppler spectrum: mean radial speed and spread.
struct DopplerSpectrum {
    double mean_velocity; // v_c, m/s
    double spread;        // sigma_s, m/s

    void validate() const { require(spread > 0.0, "kernel: Doppler spread must be positive"); }
};

/// Diagonal clutter covariance over the grid, k-major blocks of J range bins.
struct ClutterKernel {
    std::vector<double> variances;

    std::size_t size() const { return variances.size(); }
};

/// Sea-surface reflectivity scaled by the bin area:
/// sigma_0 = 10^(0.6 K_b sin psi) / (2.51e6 lambda) * A with A = R * theta_BW * dR.
inline double sea_rcs(double range, const RadarConstants& c) {
    require(range > 0.0, "sea_rcs: range must be positive");
    const double area = range * c.beamwidth * c.range_resolution;
    const double refl = std::pow(10.0, 0.6 * c.beaufort * std::sin(c.grazing_angle)) /
                        (2.51e6 * c.wavelength);
    return refl * area;
}

/// Integral of exp(-(s - v_c)^2 / (2 sigma_s^2)) over [v - dv/2, v + dv/2],
/// in closed form through erf. Positive for dv > 0 until erf saturation; the
/// far tail underflows to exact zero, which the kernel floor absorbs.
inline double doppler_weight(double v, double dv, const DopplerSpectrum& spec) {
    require(dv > 0.0, "doppler_weight: bin width must be positive");
    spec.validate();
    const double inv = 1.0 / (std::sqrt(2.0) * spec.spread);
    const double hi = (v + 0.5 * dv - spec.mean_velocity) * inv;
    const double lo = (v - 0.5 * dv - spec.mean_velocity) * inv;
    // bins entirely inside one tail: erf(hi) - erf(lo) cancels against 1,
    // erfc keeps full relative accuracy out to where the mass underflows
    double w;
    if (lo >= 0.0)
        w = std::erfc(lo) - std::erfc(hi);
    else if (hi <= 0.0)
        w = std::erfc(-hi) - std::erfc(-lo);
    else
        w = std::erf(hi) - std::erf(lo);
    return spec.spread * std::sqrt(M_PI / 2.0) * w;
}

/// Compose the range equation with the Doppler spectrum into the diagonal
/// covariance. Variances are clamped below at floor_rel times the maximum so
/// the inverse weighting stays finite across many decades of r^-4 decay.
/// area_override, when non-empty, replaces the linear R*theta*dR bin area
/// with explicit per-range values (length J).
inline ClutterKernel build_kernel(const RangeDopplerGrid& grid, const RadarConstants& consts,
                                  const DopplerSpectrum& spec,
                                  const std::vector<double>& area_override = {},
                                  double floor_rel = 1e-30) {
    consts.validate();
    spec.validate();
    const int J = grid.n_delays();
    const int K = grid.n_velocities();
    if (!area_override.empty())
        require(static_cast<int>(area_override.size()) == J,
                "build_kernel: area override length must equal the delay count");

    std::vector<double> range_factor(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        const double r = 0.5 * speed_of_light * grid.delay(j) + consts.range_offset;
        require(r > 0.0, "build_kernel: range bin " + std::to_string(j) +
                             " has non-positive range; set a range offset");
        double rcs;
        if (area_override.empty()) {
            rcs = sea_rcs(r, consts);
        } else {
            const double refl =
                std::pow(10.0, 0.6 * consts.beaufort * std::sin(consts.grazing_angle)) /
                (2.51e6 * consts.wavelength);
            rcs = refl * area_override[static_cast<std::size_t>(j)];
        }
        range_factor[static_cast<std::size_t>(j)] = rcs * consts.k_radar / (r * r * r * r);
    }

    ClutterKernel kernel;
    kernel.variances.resize(grid.size());
    double max_var = 0.0;
    for (int k = 0; k < K; ++k) {
        const double w = doppler_weight(grid.velocity(k), grid.velocity_spacing(k), spec);
        for (int j = 0; j < J; ++j) {
            const double v = range_factor[static_cast<std::size_t>(j)] * w;
            kernel.variances[grid.flat_index(j, k)] = v;
            max_var = std::max(max_var, v);
        }
    }
    const double floor = floor_rel * max_var;
    for (auto& v : kernel.variances) v = std::max(v, floor);
    return kernel;
}

/// Sigma_C = I: unit variance everywhere.
inline ClutterKernel uniform_kernel(const RangeDopplerGrid& grid) {
    ClutterKernel kernel;
    kernel.variances.assign(grid.size(), 1.0);
    return kernel;
}

/// Elementwise regularizer weights lambda_C / sigma^2; all zero at lambda_C = 0
/// (the pure-projection case).
inline std::vector<double> inverse_weights(const ClutterKernel& kernel, double lambda_c) {
    require(lambda_c >= 0.0, "inverse_weights: lambda_c must be non-negative");
    std::vector<double> w(kernel.variances.size());
    if (lambda_c == 0.0) return w;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = lambda_c / kernel.variances[i];
    return w;
}

} // namespace kcf
