#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>

#include <fftw3.h>

#include "kcf/common.hpp"

namespace kcf::fft {

struct Counts {
    std::uint64_t forward = 0;
    std::uint64_t inverse = 0;
    std::uint64_t total() const { return forward + inverse; }
};

namespace detail {
inline std::atomic<std::uint64_t>& forward_count() {
    static std::atomic<std::uint64_t> c{0};
    return c;
}
inline std::atomic<std::uint64_t>& inverse_count() {
    static std::atomic<std::uint64_t> c{0};
    return c;
}
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Snapshot of the process-wide transform counters.
inline Counts counters() {
    return {detail::forward_count().load(), detail::inverse_count().load()};
}

inline void reset_counters() {
    detail::forward_count().store(0);
    detail::inverse_count().store(0);
}

/// One-dimensional complex DFT of a fixed length. Plans are created once at
/// construction (FFTW's planner is not thread-safe, so creation is guarded);
/// execution through the new-array interface is safe to call concurrently on
/// distinct buffers. Plans use FFTW_UNALIGNED so ordinary std::vector storage
/// is accepted and the chosen algorithm does not depend on buffer addresses.
class Plan {
public:
    explicit Plan(std::size_t n) : n_(n) {
        require(n >= 1, "fft: transform length must be >= 1");
        cvec a(n), b(n);
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(a.data()), as_fftw(b.data()),
                                FFTW_FORWARD, flags);
        inv_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(a.data()), as_fftw(b.data()),
                                FFTW_BACKWARD, flags);
    }

    ~Plan() {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
    }

    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;

    std::size_t size() const { return n_; }

    /// out = DFT(in), unnormalized. in and out must be distinct length-n buffers.
    void forward(const cplx* in, cplx* out) const {
        fftw_execute_dft(fwd_, as_fftw(in), as_fftw(out));
        detail::forward_count().fetch_add(1, std::memory_order_relaxed);
    }

    /// out = IDFT(in) including the 1/n factor, so forward then inverse is identity.
    void inverse(const cplx* in, cplx* out) const {
        fftw_execute_dft(inv_, as_fftw(in), as_fftw(out));
        const double scale = 1.0 / static_cast<double>(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] *= scale;
        detail::inverse_count().fetch_add(1, std::memory_order_relaxed);
    }

    void forward(const cvec& in, cvec& out) const {
        out.resize(n_);
        forward(in.data(), out.data());
    }

    void inverse(const cvec& in, cvec& out) const {
        out.resize(n_);
        inverse(in.data(), out.data());
    }

private:
    static fftw_complex* as_fftw(const cplx* p) {
        return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
    }

    std::size_t n_;
    fftw_plan fwd_;
    fftw_plan inv_;
};

} // namespace kcf::fft
