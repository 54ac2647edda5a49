#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pitchcov/audio_io.hpp"
#include "pitchcov/error.hpp"

namespace pitchcov {

/// Tracker configuration. `first_center_ms` places frame i at first_center + i*step,
/// which by default coincides with the centers of 35 ms MFCC frames.
struct PitchParams {
    double f0_min_hz = 60.0;
    double f0_max_hz = 800.0;
    double step_ms = 10.0;
    double corr_window_ms = 25.0;
    double voicing_threshold = 0.3;
    double octave_cost = 0.2;
    double transition_cost = 0.1;
    double lag_weight = 0.1;       // penalty growing linearly with lag; biases away from subharmonics
    double first_center_ms = 17.5;
    std::size_t max_candidates = 6;
    double lowpass_hz = 600.0;     // correlation runs on a low-passed copy; 0 disables

    void validate() const {
        if (!(f0_min_hz > 0.0 && f0_min_hz < f0_max_hz)) throw Error(ErrorCode::InvalidRange, "need 0 < f0_min < f0_max");
        if (!(voicing_threshold > 0.0 && voicing_threshold < 1.0)) {
            throw Error(ErrorCode::InvalidRange, "voicing_threshold must lie in (0, 1)");
        }
        if (step_ms <= 0.0 || corr_window_ms <= 0.0 || first_center_ms < 0.0) {
            throw Error(ErrorCode::InvalidRange, "step, window and first center must be positive");
        }
        if (octave_cost < 0.0 || transition_cost < 0.0 || lag_weight < 0.0 || lag_weight >= 1.0) {
            throw Error(ErrorCode::InvalidRange, "costs must be non-negative and lag_weight < 1");
        }
        if (max_candidates == 0) throw Error(ErrorCode::InvalidRange, "max_candidates must be positive");
    }
};

/// Per-frame F0 with voicing; f0_hz is 0 exactly where voiced is false.
struct PitchTrack {
    std::vector<double> frame_times_s;
    std::vector<double> f0_hz;
    std::vector<bool> voiced;
    PitchParams params;

    std::size_t frames() const noexcept { return f0_hz.size(); }

    std::vector<double> voiced_f0() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < f0_hz.size(); ++i) {
            if (voiced[i]) out.push_back(f0_hz[i]);
        }
        return out;
    }
};

/// Semitones relative to base_hz, for voiced frames only.
struct SemitoneTrack {
    std::vector<double> frame_times_s;
    std::vector<double> semitones;
    double base_hz = 0.0;
};

namespace detail {

struct LagCandidate {
    double lag;    // fractional lag in samples
    double nccf;
    double cost;   // local cost of choosing this candidate
};

/// NCCF at a fractional lag, the lagged segment linearly interpolated. Short periods
/// rarely span a whole number of samples, and the parabola through integer lags then
/// underestimates the peak enough for an exact multiple of the period to win.
inline double fractional_nccf(std::span<const double> x, std::size_t center, std::size_t window, double lag) {
    const auto base = static_cast<std::size_t>(lag);
    const double d = lag - static_cast<double>(base);
    const std::size_t n = x.size();
    if (window + base + 1 > n) return 0.0;
    long start = static_cast<long>(center) - static_cast<long>((window + base) / 2);
    start = std::clamp(start, 0L, static_cast<long>(n - window - base - 1));
    const double* a = x.data() + start;
    const double* b = a + base;
    double cross = 0.0, ea = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        const double v = (1.0 - d) * b[i] + d * b[i + 1];
        cross += a[i] * v;
        ea += a[i] * a[i];
        eb += v * v;
    }
    const double denom = std::sqrt(ea * eb);
    return denom > 1e-20 ? cross / denom : 0.0;
}

inline std::vector<LagCandidate> frame_candidates(std::span<const double> x, std::span<const double> energy_prefix,
                                                  std::size_t center, std::size_t window, std::size_t min_lag,
                                                  std::size_t max_lag, const PitchParams& p,
                                                  std::vector<double>& nccf) {
    const std::size_t n = x.size();
    nccf.assign(max_lag + 2, 0.0);
    const std::size_t lo = min_lag > 0 ? min_lag - 1 : 0;
    for (std::size_t k = lo; k <= max_lag + 1; ++k) {
        if (window + k > n) break;
        // Both segments are placed symmetrically about the frame center.
        const long half = static_cast<long>((window + k) / 2);
        long start = static_cast<long>(center) - half;
        start = std::clamp(start, 0L, static_cast<long>(n - window - k));
        const auto s = static_cast<std::size_t>(start);
        const double* a = x.data() + s;
        const double* b = a + k;
        double cross = 0.0;
        for (std::size_t i = 0; i < window; ++i) cross += a[i] * b[i];
        const double ea = energy_prefix[s + window] - energy_prefix[s];
        const double eb = energy_prefix[s + k + window] - energy_prefix[s + k];
        const double denom = std::sqrt(ea * eb);
        nccf[k] = denom > 1e-20 ? cross / denom : 0.0;
    }

    std::vector<LagCandidate> cands;
    for (std::size_t k = std::max<std::size_t>(min_lag, 1); k <= max_lag; ++k) {
        const double c = nccf[k];
        if (c < p.voicing_threshold) continue;
        if (!(c >= nccf[k - 1] && c > nccf[k + 1])) continue;
        // Parabolic refinement of the peak.
        const double l = nccf[k - 1];
        const double r = nccf[k + 1];
        const double curvature = l - 2.0 * c + r;
        double offset = 0.0;
        double peak = c;
        if (curvature < 0.0) {
            offset = std::clamp(0.5 * (l - r) / curvature, -0.5, 0.5);
            peak = std::min(1.0, c - 0.25 * (l - r) * offset);
        }
        const double lag = static_cast<double>(k) + offset;
        const double weighted = peak * (1.0 - p.lag_weight * lag / static_cast<double>(max_lag));
        cands.push_back({lag, peak, 1.0 - weighted});
    }
    std::sort(cands.begin(), cands.end(), [](const LagCandidate& a, const LagCandidate& b) { return a.cost < b.cost; });
    if (cands.size() > p.max_candidates) cands.resize(p.max_candidates);
    return cands;
}

/// Zero-phase (forward-backward) 2nd-order Butterworth low-pass.
inline std::vector<double> lowpass(std::span<const double> x, double cutoff_hz, int rate) {
    const double w = std::tan(M_PI * std::min(cutoff_hz, 0.45 * rate) / rate);
    const double norm = 1.0 / (1.0 + std::sqrt(2.0) * w + w * w);
    const double b0 = w * w * norm;
    const double b1 = 2.0 * b0;
    const double a1 = 2.0 * (w * w - 1.0) * norm;
    const double a2 = (1.0 - std::sqrt(2.0) * w + w * w) * norm;
    std::vector<double> y(x.begin(), x.end());
    auto pass = [&](auto first, auto last) {
        double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
        for (auto it = first; it != last; ++it) {
            const double in = *it;
            const double out = b0 * in + b1 * x1 + b0 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = in;
            y2 = y1;
            y1 = out;
            *it = out;
        }
    };
    pass(y.begin(), y.end());
    pass(y.rbegin(), y.rend());
    return y;
}

}  // namespace detail

/// Number of tracker frames for a signal: centers at first_center + i*step that keep
/// first_center samples of context on both sides.
inline std::size_t pitch_frame_count(std::size_t n_samples, std::size_t first_center, std::size_t step) {
    if (n_samples < 2 * first_center) return 0;
    return (n_samples - 2 * first_center) / step + 1;
}

/// NCCF candidate search per frame followed by a Viterbi pass over
/// {candidates, unvoiced}. Transition costs penalize octave jumps between voiced
/// frames and voicing switches.
inline PitchTrack track_f0(const AudioBuffer& buf, const PitchParams& params = {}) {
    params.validate();
    const int rate = buf.sample_rate_hz;
    if (rate < 2.0 * params.f0_max_hz) {
        throw Error(ErrorCode::RateTooLow, "sample rate " + std::to_string(rate) + " Hz is below 2*f0_max");
    }

    const auto min_lag = static_cast<std::size_t>(std::floor(rate / params.f0_max_hz));
    const auto max_lag = static_cast<std::size_t>(std::ceil(rate / params.f0_min_hz));
    const auto window = static_cast<std::size_t>(std::lround(params.corr_window_ms * rate / 1000.0));
    const auto step = static_cast<std::size_t>(std::lround(params.step_ms * rate / 1000.0));
    const auto first = static_cast<std::size_t>(std::lround(params.first_center_ms * rate / 1000.0));
    const std::size_t count = pitch_frame_count(buf.size(), first, std::max<std::size_t>(step, 1));

    PitchTrack track;
    track.params = params;
    track.frame_times_s.resize(count);
    track.f0_hz.assign(count, 0.0);
    track.voiced.assign(count, false);
    for (std::size_t i = 0; i < count; ++i) {
        track.frame_times_s[i] = static_cast<double>(first + i * step) / rate;
    }
    if (count == 0) return track;

    const std::vector<double> x = params.lowpass_hz > 0.0 ? detail::lowpass(buf.samples, params.lowpass_hz, rate)
                                                          : buf.samples;
    std::vector<double> prefix(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];

    std::vector<std::vector<detail::LagCandidate>> cands(count);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < count; ++i) {
        cands[i] = detail::frame_candidates(x, prefix, first + i * step, window, min_lag, max_lag, params,
                                            scratch);
    }

    // Viterbi. State index 0 is unvoiced, 1.. are candidates.
    const double unvoiced_cost = 1.0 - params.voicing_threshold;
    std::vector<std::vector<double>> total(count);
    std::vector<std::vector<std::size_t>> back(count);
    auto transition = [&](std::size_t frame, std::size_t from, std::size_t to) {
        if (from == 0 && to == 0) return 0.0;
        if (from == 0 || to == 0) return params.transition_cost;
        const double ratio = cands[frame - 1][from - 1].lag / cands[frame][to - 1].lag;
        return params.octave_cost * std::abs(std::log2(ratio));
    };

    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t states = cands[i].size() + 1;
        total[i].assign(states, 0.0);
        back[i].assign(states, 0);
        for (std::size_t s = 0; s < states; ++s) {
            const double local = s == 0 ? unvoiced_cost : cands[i][s - 1].cost;
            if (i == 0) {
                total[i][s] = local;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            std::size_t arg = 0;
            for (std::size_t prev = 0; prev < total[i - 1].size(); ++prev) {
                const double c = total[i - 1][prev] + transition(i, prev, s);
                if (c < best) {
                    best = c;
                    arg = prev;
                }
            }
            total[i][s] = best + local;
            back[i][s] = arg;
        }
    }

    const auto& last = total[count - 1];
    std::size_t state = static_cast<std::size_t>(std::min_element(last.begin(), last.end()) - last.begin());
    for (std::size_t i = count; i-- > 0;) {
        if (state != 0) {
            const double f0 = rate / cands[i][state - 1].lag;
            track.f0_hz[i] = std::clamp(f0, params.f0_min_hz, params.f0_max_hz);
            track.voiced[i] = true;
        }
        state = back[i][state];
    }
    return track;
}

/// Linear interpolation between order statistics at rank p/100*(n-1).
inline double percentile(std::span<const double> values, double p) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "percentile of an empty sequence");
    if (!(p >= 0.0 && p <= 100.0)) throw Error(ErrorCode::InvalidRange, "percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double rank = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double hz_to_semitone(double f0_hz, double base_hz) { return 12.0 * std::log2(f0_hz / base_hz); }
inline double semitone_to_hz(double semitones, double base_hz) { return base_hz * std::exp2(semitones / 12.0); }

inline SemitoneTrack hz_to_semitones(const PitchTrack& track, double base_hz) {
    if (!(base_hz > 0.0)) throw Error(ErrorCode::NonPositiveBase, "semitone base must be positive");
    SemitoneTrack st;
    st.base_hz = base_hz;
    for (std::size_t i = 0; i < track.frames(); ++i) {
        if (!track.voiced[i]) continue;
        st.frame_times_s.push_back(track.frame_times_s[i]);
        st.semitones.push_back(hz_to_semitone(track.f0_hz[i], base_hz));
    }
    return st;
}

}  // namespace pitchcov
