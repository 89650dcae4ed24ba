#pragma once

#include <complex>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace kcf {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using rvec = std::vector<double>;

inline constexpr double speed_of_light = 299792458.0;

/// Thrown when an input violates a documented precondition or invariant.
class invalid_argument_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a dense materialization would exceed the configured memory cap.
class resource_limit_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by iterative solvers on numerical breakdown.
class numerical_breakdown_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a metric is undefined for the given inputs.
class undefined_metric_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw invalid_argument_error(msg);
}

/// Deterministic random source. Wraps a fixed 64-bit generator and produces
/// all variates through explicit transforms, so that identical seeds give
/// bit-identical streams on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // xorshift* variant; period 2^64-1, plenty for simulation use
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi].
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Standard normal via Box-Muller (fresh pair per call, second draw kept).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Zero-mean circular complex Gaussian with E|z|^2 = variance.
    cplx circular_gaussian(double variance) {
        double s = std::sqrt(variance * 0.5);
        return {s * gaussian(), s * gaussian()};
    }

    /// Exponential with the given mean.
    double exponential(double mean) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return -mean * std::log(u);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Mix a base seed with run indices into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

inline double norm2(const cvec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

inline cplx dot(const cvec& a, const cvec& b) {
    // <a, b> = sum conj(a_i) b_i
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

} // namespace kcf
