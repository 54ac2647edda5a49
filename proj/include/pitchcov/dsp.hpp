#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "pitchcov/audio_io.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/fft.hpp"
#include "pitchcov/matrix.hpp"

namespace pitchcov {

/// Analysis framing and cepstral configuration. Defaults give 40-D MFCCs from
/// 35 ms Hann windows every 10 ms.
struct FrameSpec {
    double window_ms = 35.0;
    double step_ms = 10.0;
    std::optional<std::size_t> n_fft;  // default: next power of two >= window length
    std::size_t n_mels = 40;
    std::size_t n_mfcc = 40;
    double fmin_hz = 0.0;
    std::optional<double> fmax_hz;  // default: Nyquist
    double log_floor = 1e-10;

    std::size_t window_length(int rate) const {
        return static_cast<std::size_t>(std::lround(window_ms * rate / 1000.0));
    }
    std::size_t step_length(int rate) const {
        return static_cast<std::size_t>(std::lround(step_ms * rate / 1000.0));
    }
    std::size_t fft_length(int rate) const { return n_fft.value_or(next_power_of_two(window_length(rate))); }
    double fmax(int rate) const { return fmax_hz.value_or(rate / 2.0); }

    void validate(int rate) const {
        const std::size_t win = window_length(rate);
        const std::size_t step = step_length(rate);
        if (win == 0 || step == 0) throw Error(ErrorCode::InvalidRange, "window and step must span at least one sample");
        if (step_ms > window_ms) throw Error(ErrorCode::InvalidRange, "step_ms must not exceed window_ms");
        if (n_mfcc == 0 || n_mfcc > n_mels) throw Error(ErrorCode::InvalidRange, "need 0 < n_mfcc <= n_mels");
        const std::size_t nfft = fft_length(rate);
        if (nfft < win || !is_power_of_two(nfft)) {
            throw Error(ErrorCode::InvalidRange, "n_fft must be a power of two >= window length");
        }
        if (!(fmin_hz >= 0.0 && fmin_hz < fmax(rate) && fmax(rate) <= rate / 2.0)) {
            throw Error(ErrorCode::InvalidRange, "need 0 <= fmin < fmax <= sample_rate/2");
        }
    }
};

/// Frames x n_mfcc cepstra with per-frame center times.
struct MfccMatrix {
    Matrix coeffs;
    std::vector<double> frame_times_s;
    FrameSpec spec;
    int sample_rate_hz = kCanonicalRateHz;

    std::size_t frames() const noexcept { return coeffs.rows(); }
    std::size_t dims() const noexcept { return coeffs.cols(); }
};

/// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

inline std::size_t frame_count(std::size_t n_samples, std::size_t win_len, std::size_t step_len) {
    if (n_samples < win_len) return 0;
    return (n_samples - win_len) / step_len + 1;
}

inline double frame_time_s(std::size_t index, std::size_t win_len, std::size_t step_len, int rate) {
    return (static_cast<double>(win_len) / 2.0 + static_cast<double>(index * step_len)) / rate;
}

/// Hann-windowed frames without edge padding; a trailing partial frame is dropped.
inline std::vector<std::vector<double>> frame_signal(const AudioBuffer& buf, const FrameSpec& spec) {
    const std::size_t win = spec.window_length(buf.sample_rate_hz);
    const std::size_t step = spec.step_length(buf.sample_rate_hz);
    const std::size_t count = frame_count(buf.size(), win, step);
    const auto window = hann_window(win);
    std::vector<std::vector<double>> frames(count, std::vector<double>(win));
    for (std::size_t f = 0; f < count; ++f) {
        const double* src = buf.samples.data() + f * step;
        for (std::size_t i = 0; i < win; ++i) frames[f][i] = src[i] * window[i];
    }
    return frames;
}

/// |DFT_k|^2 for k = 0..n_fft/2 of the frame zero-padded to n_fft.
inline std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft) {
    if (frame.size() > n_fft) throw Error(ErrorCode::InvalidRange, "frame longer than n_fft");
    std::vector<double> padded(n_fft, 0.0);
    std::copy(frame.begin(), frame.end(), padded.begin());
    const auto spectrum = rfft(padded);
    std::vector<double> power(spectrum.size());
    for (std::size_t k = 0; k < spectrum.size(); ++k) power[k] = std::norm(spectrum[k]);
    return power;
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
namespace slaney {
inline constexpr double kHzPerMel = 200.0 / 3.0;
inline constexpr double kBreakHz = 1000.0;
inline constexpr double kBreakMel = kBreakHz / kHzPerMel;  // 15
inline const double kLogStep = std::log(6.4) / 27.0;
}  // namespace slaney

inline double hz_to_mel(double hz) {
    if (hz < slaney::kBreakHz) return hz / slaney::kHzPerMel;
    return slaney::kBreakMel + std::log(hz / slaney::kBreakHz) / slaney::kLogStep;
}

inline double mel_to_hz(double mel) {
    if (mel < slaney::kBreakMel) return mel * slaney::kHzPerMel;
    return slaney::kBreakHz * std::exp(slaney::kLogStep * (mel - slaney::kBreakMel));
}

/// Triangular filters on the Slaney mel scale, each scaled by 2/(f_upper - f_lower).
inline Matrix mel_filterbank(const FrameSpec& spec, int sample_rate_hz) {
    const double fmin = spec.fmin_hz;
    const double fmax = spec.fmax(sample_rate_hz);
    if (!(fmin < fmax)) throw Error(ErrorCode::InvalidRange, "fmin must be below fmax");
    if (fmin < 0.0 || fmax > sample_rate_hz / 2.0) {
        throw Error(ErrorCode::InvalidRange, "filterbank edges must lie in [0, sample_rate/2]");
    }

    const std::size_t n_fft = spec.fft_length(sample_rate_hz);
    const std::size_t n_bins = n_fft / 2 + 1;
    const std::size_t n_mels = spec.n_mels;

    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1);
        edges[i] = mel_to_hz(mel);
    }

    Matrix fb(n_mels, n_bins);
    for (std::size_t m = 0; m < n_mels; ++m) {
        const double lo = edges[m];
        const double mid = edges[m + 1];
        const double hi = edges[m + 2];
        const double norm = 2.0 / (hi - lo);
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n_fft);
            const double rising = (f - lo) / (mid - lo);
            const double falling = (hi - f) / (hi - mid);
            fb(m, k) = std::max(0.0, std::min(rising, falling)) * norm;
        }
    }
    return fb;
}

/// Orthonormal DCT-II basis, n_out x n_in.
inline Matrix dct2_matrix(std::size_t n_out, std::size_t n_in) {
    Matrix basis(n_out, n_in);
    const double n = static_cast<double>(n_in);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (std::size_t i = 0; i < n_in; ++i) {
            basis(k, i) = s * std::cos(M_PI * static_cast<double>(k) * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n));
        }
    }
    return basis;
}

/// Reusable MFCC front end; the filterbank and DCT are built once and read-only afterwards.
class MfccExtractor {
public:
    MfccExtractor(const FrameSpec& spec, int sample_rate_hz)
        : spec_(spec), rate_(sample_rate_hz) {
        spec_.validate(rate_);
        filterbank_ = mel_filterbank(spec_, rate_);
        dct_ = dct2_matrix(spec_.n_mfcc, spec_.n_mels);
        window_ = hann_window(spec_.window_length(rate_));
    }

    const FrameSpec& spec() const noexcept { return spec_; }
    const Matrix& filterbank() const noexcept { return filterbank_; }

    MfccMatrix operator()(const AudioBuffer& buf) const {
        if (buf.sample_rate_hz != rate_) {
            throw Error(ErrorCode::InvalidRange, "buffer rate " + std::to_string(buf.sample_rate_hz) +
                                                     " does not match extractor rate " + std::to_string(rate_));
        }
        const std::size_t win = spec_.window_length(rate_);
        const std::size_t step = spec_.step_length(rate_);
        const std::size_t n_fft = spec_.fft_length(rate_);
        const std::size_t count = frame_count(buf.size(), win, step);

        MfccMatrix out;
        out.spec = spec_;
        out.sample_rate_hz = rate_;
        out.coeffs = Matrix(count, spec_.n_mfcc);
        out.frame_times_s.resize(count);

        std::vector<double> frame(win);
        std::vector<double> log_mel(spec_.n_mels);
        for (std::size_t f = 0; f < count; ++f) {
            const double* src = buf.samples.data() + f * step;
            for (std::size_t i = 0; i < win; ++i) frame[i] = src[i] * window_[i];
            const auto power = power_spectrum(frame, n_fft);
            for (std::size_t m = 0; m < spec_.n_mels; ++m) {
                const auto weights = filterbank_.row(m);
                double energy = 0.0;
                for (std::size_t k = 0; k < power.size(); ++k) energy += weights[k] * power[k];
                log_mel[m] = std::log(std::max(energy, spec_.log_floor));
            }
            for (std::size_t c = 0; c < spec_.n_mfcc; ++c) {
                const auto basis = dct_.row(c);
                double acc = 0.0;
                for (std::size_t m = 0; m < spec_.n_mels; ++m) acc += basis[m] * log_mel[m];
                out.coeffs(f, c) = acc;
            }
            out.frame_times_s[f] = frame_time_s(f, win, step, rate_);
        }
        return out;
    }

private:
    FrameSpec spec_;
    int rate_;
    Matrix filterbank_;
    Matrix dct_;
    std::vector<double> window_;
};

inline MfccMatrix mfcc(const AudioBuffer& buf, const FrameSpec& spec = {}) {
    return MfccExtractor(spec, buf.sample_rate_hz)(buf);
}

}  // namespace pitchcov
