#pragma once

#include <algorithm>

#include "kcf/common.hpp"
#include "kcf/fft.hpp"
#include "kcf/grid.hpp"
#include "kcf/waveform.hpp"

namespace kcf {

/// Matrix-free clutter dictionary A_C, stacked per-pulse blocks
/// A_C,m = phi_m^T kron S_m with S_m the L x J Toeplitz matrix of pulse m.
/// All products are length-L FFT convolutions. s_m is zero beyond N and the
/// coefficient blocks are zero-padded beyond J = L-N+1, so every circular
/// product below equals the linear one on its valid window; no extra padding.
///
/// Transform budget, counted by the global instrumentation in kcf::fft:
///   construction: M forward (pulse spectra, cached for the operator's life)
///   adjoint:      M forward + M inverse
///   forward:      K forward + M inverse
///   gram:         K forward + M inverse
/// The k-sums are accumulated in the frequency domain before the one inverse
/// transform per pulse; tests pin these counts and the exactness of that
/// accumulation.
class ClutterOperator {
public:
    ClutterOperator(const PulseTrain& train, const RangeDopplerGrid& grid)
        : m_(train.n_pulses()),
          l_(train.block_len),
          n_(train.max_pulse_len()),
          j_(train.n_range_bins()),
          k_(grid.n_velocities()),
          plan_(static_cast<std::size_t>(train.block_len)) {
        require(grid.n_delays() == j_, "operator: grid delay count must be L - N + 1");
        require(std::abs(grid.delay_step() * train.sample_rate - 1.0) < 1e-9,
                "operator: grid delay step must equal the sampling interval");
        pulse_spectra_.resize(static_cast<std::size_t>(m_));
        power_spectra_.resize(static_cast<std::size_t>(m_));
        cvec padded(static_cast<std::size_t>(l_));
        for (int m = 0; m < m_; ++m) {
            const cvec& s = train.pulses[static_cast<std::size_t>(m)].samples;
            std::fill(padded.begin(), padded.end(), cplx{});
            std::copy(s.begin(), s.end(), padded.begin());
            auto& spec = pulse_spectra_[static_cast<std::size_t>(m)];
            spec.resize(static_cast<std::size_t>(l_));
            plan_.forward(padded.data(), spec.data());
            auto& pow = power_spectra_[static_cast<std::size_t>(m)];
            pow.resize(static_cast<std::size_t>(l_));
            for (int f = 0; f < l_; ++f)
                pow[static_cast<std::size_t>(f)] = std::norm(spec[static_cast<std::size_t>(f)]);
        }
        phases_ = doppler_phases(grid, train);
    }

    int n_pulses() const { return m_; }
    int block_len() const { return l_; }
    int pulse_len() const { return n_; }
    int n_delays() const { return j_; }
    int n_velocities() const { return k_; }
    std::size_t domain_size() const {
        return static_cast<std::size_t>(j_) * static_cast<std::size_t>(k_);
    }
    std::size_t range_size() const {
        return static_cast<std::size_t>(m_) * static_cast<std::size_t>(l_);
    }

    const cvec& pulse_spectrum(int m) const { return pulse_spectra_[static_cast<std::size_t>(m)]; }
    const rvec& power_spectrum(int m) const { return power_spectra_[static_cast<std::size_t>(m)]; }
    cplx phase(int m, int k) const {
        return phases_[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
    }
    const fft::Plan& plan() const { return plan_; }

    /// f = A_C^H y, blocks f_k = sum_m conj(phi_m[k]) S_m^H y_m. The per-pulse
    /// correlation is one FFT of the block and one inverse of the conjugate
    /// product, truncated to the J valid lags.
    cvec adjoint(const cvec& y) const {
        require(y.size() == range_size(), "adjoint: expected M*L concatenated samples");
        cvec f(domain_size());
        cvec spec(static_cast<std::size_t>(l_));
        cvec corr(static_cast<std::size_t>(l_));
        for (int m = 0; m < m_; ++m) {
            plan_.forward(y.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(l_),
                          spec.data());
            const cvec& s = pulse_spectra_[static_cast<std::size_t>(m)];
            for (int i = 0; i < l_; ++i)
                spec[static_cast<std::size_t>(i)] *= std::conj(s[static_cast<std::size_t>(i)]);
            plan_.inverse(spec.data(), corr.data());
            for (int k = 0; k < k_; ++k) {
                const cplx p = std::conj(phase(m, k));
                cplx* out = f.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(j_);
                for (int j = 0; j < j_; ++j) out[j] += p * corr[static_cast<std::size_t>(j)];
            }
        }
        return f;
    }

    /// y_m = sum_k phi_m[k] S_m g_k; Doppler slices are mixed per frequency
    /// bin, then one inverse transform per pulse synthesizes the block.
    cvec forward(const cvec& g) const {
        require(g.size() == domain_size(), "forward: expected J*K coefficients");
        const auto slice_spectra = slice_ffts(g);
        cvec y(range_size());
        cvec acc(static_cast<std::size_t>(l_));
        for (int m = 0; m < m_; ++m) {
            mix_slices(slice_spectra, m, acc);
            const cvec& s = pulse_spectra_[static_cast<std::size_t>(m)];
            for (int i = 0; i < l_; ++i)
                acc[static_cast<std::size_t>(i)] *= s[static_cast<std::size_t>(i)];
            plan_.inverse(acc.data(),
                          y.data() + static_cast<std::size_t>(m) * static_cast<std::size_t>(l_));
        }
        return y;
    }

    /// (A_C^H A_C + diag(sigma)) g. The per-pulse kernel is |F s_m|^2, so each
    /// pulse costs one inverse transform over the mixed slices; the rank-one
    /// Doppler factor is applied by the same mix/scatter pair as forward and
    /// adjoint. sigma may be empty (no regularizer).
    cvec gram_regularized(const rvec& sigma, const cvec& g) const {
        require(g.size() == domain_size(), "gram: expected J*K coefficients");
        if (!sigma.empty()) {
            require(sigma.size() == domain_size(), "gram: weight vector length mismatch");
            for (double s : sigma) require(s >= 0.0, "gram: negative regularizer weight");
        }
        const auto slice_spectra = slice_ffts(g);
        cvec out(domain_size());
        if (!sigma.empty())
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigma[i] * g[i];

        cvec acc(static_cast<std::size_t>(l_));
        cvec w(static_cast<std::size_t>(l_));
        for (int m = 0; m < m_; ++m) {
            mix_slices(slice_spectra, m, acc);
            const rvec& pow = power_spectra_[static_cast<std::size_t>(m)];
            for (int i = 0; i < l_; ++i)
                acc[static_cast<std::size_t>(i)] *= pow[static_cast<std::size_t>(i)];
            plan_.inverse(acc.data(), w.data());
            for (int k = 0; k < k_; ++k) {
                const cplx p = std::conj(phase(m, k));
                cplx* dst = out.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(j_);
                for (int j = 0; j < j_; ++j) dst[j] += p * w[static_cast<std::size_t>(j)];
            }
        }
        return out;
    }

private:
    /// FFT of each zero-padded length-J block of g; K forward transforms.
    std::vector<cvec> slice_ffts(const cvec& g) const {
        std::vector<cvec> spectra(static_cast<std::size_t>(k_));
        cvec padded(static_cast<std::size_t>(l_));
        for (int k = 0; k < k_; ++k) {
            std::fill(padded.begin(), padded.end(), cplx{});
            std::copy(g.begin() + static_cast<std::ptrdiff_t>(k) * j_,
                      g.begin() + static_cast<std::ptrdiff_t>(k) * j_ + j_, padded.begin());
            spectra[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(l_));
            plan_.forward(padded.data(), spectra[static_cast<std::size_t>(k)].data());
        }
        return spectra;
    }

    /// acc = sum_k phi_m[k] * spectra_k, the frequency-domain Doppler mix.
    void mix_slices(const std::vector<cvec>& spectra, int m, cvec& acc) const {
        std::fill(acc.begin(), acc.end(), cplx{});
        for (int k = 0; k < k_; ++k) {
            const cplx p = phase(m, k);
            const cvec& sk = spectra[static_cast<std::size_t>(k)];
            for (int i = 0; i < l_; ++i)
                acc[static_cast<std::size_t>(i)] += p * sk[static_cast<std::size_t>(i)];
        }
    }

    int m_, l_, n_, j_, k_;
    fft::Plan plan_;
    std::vector<cvec> pulse_spectra_; // F s_m, length L
    std::vector<rvec> power_spectra_; // |F s_m|^2
    std::vector<cvec> phases_;        // phi_m[k], M x K
};

} // namespace kcf
