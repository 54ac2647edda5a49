#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pitchcov/audio_io.hpp"
#include "pitchcov/error.hpp"
#include "pitchcov/parallel.hpp"

namespace pitchcov {

enum class Mechanism { Sinusoidal, Complicated, Constant };

inline std::string_view to_string(Mechanism m) {
    switch (m) {
    case Mechanism::Sinusoidal: return "sinusoidal";
    case Mechanism::Complicated: return "complicated";
    case Mechanism::Constant: return "constant";
    }
    return "unknown";
}

inline std::optional<Mechanism> parse_mechanism(std::string_view s) {
    if (s == "sinusoidal") return Mechanism::Sinusoidal;
    if (s == "complicated") return Mechanism::Complicated;
    if (s == "constant") return Mechanism::Constant;
    return std::nullopt;
}

// Parameter ranges of the two contour generators.
namespace contour_range {
inline constexpr double kAlphaMin = 1.7227;
inline constexpr double kAlphaMax = 8.6133;
inline constexpr double kAlphaPairMin = 0.8613;
inline constexpr double kAlphaPairMax = 3.4453;
inline constexpr double kPhaseMin = -M_PI / 2.0;
inline constexpr double kPhaseMax = M_PI / 2.0;
inline constexpr double kCenterHz = 232.0;
inline constexpr double kAmplitudeHz = 172.0;
inline constexpr double kF0FloorHz = kCenterHz - kAmplitudeHz;    // 60
inline constexpr double kF0CeilingHz = kCenterHz + kAmplitudeHz;  // 404
}  // namespace contour_range

/// How the two oscillations of the complicated contour are combined.
inline constexpr std::string_view kComplicatedRule = "f0 = 232 + 86*(sin(a1*t+b1) + cos(a2*t+b2))";

struct ContourParams {
    double alpha = 0.0;
    double phi = 0.0;
    double alpha1 = 0.0;
    double beta1 = 0.0;
    double alpha2 = 0.0;
    double beta2 = 0.0;
    double constant_hz = 0.0;
};

/// F0 trajectory sampled every step_s from t = 0 to duration_s inclusive.
struct F0Contour {
    Mechanism mechanism = Mechanism::Constant;
    ContourParams params;
    double duration_s = 0.0;
    double step_s = 0.01;
    std::vector<double> f0_hz;

    /// Exact generator value at time t.
    double evaluate(double t) const {
        using namespace contour_range;
        switch (mechanism) {
        case Mechanism::Sinusoidal: return kAmplitudeHz * std::sin(params.alpha * t + params.phi) + kCenterHz;
        case Mechanism::Complicated: {
            const double a = std::sin(params.alpha1 * t + params.beta1);
            const double w = std::cos(params.alpha2 * t + params.beta2);
            return kCenterHz + 0.5 * kAmplitudeHz * (a + w);
        }
        case Mechanism::Constant: return params.constant_hz;
        }
        return 0.0;
    }

    /// Linear interpolation of the sampled trajectory, held constant past either end.
    double at(double t) const {
        if (f0_hz.empty()) return 0.0;
        const double pos = t / step_s;
        if (pos <= 0.0) return f0_hz.front();
        const auto i = static_cast<std::size_t>(pos);
        if (i + 1 >= f0_hz.size()) return f0_hz.back();
        const double frac = pos - static_cast<double>(i);
        return f0_hz[i] + frac * (f0_hz[i + 1] - f0_hz[i]);
    }
};

namespace detail {

inline void require_range(double v, double lo, double hi, const char* name) {
    if (!(v >= lo && v <= hi)) {
        throw Error(ErrorCode::ParamOutOfRange, std::string(name) + "=" + std::to_string(v) + " outside [" +
                                                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

inline F0Contour sample_contour(Mechanism m, const ContourParams& p, double duration_s, double step_s) {
    if (!(duration_s >= 0.0)) throw Error(ErrorCode::ParamOutOfRange, "duration must be non-negative");
    if (!(step_s > 0.0)) throw Error(ErrorCode::ParamOutOfRange, "step must be positive");
    F0Contour c;
    c.mechanism = m;
    c.params = p;
    c.duration_s = duration_s;
    c.step_s = step_s;
    const auto n = static_cast<std::size_t>(std::floor(duration_s / step_s + 1e-9)) + 1;
    c.f0_hz.resize(n);
    for (std::size_t i = 0; i < n; ++i) c.f0_hz[i] = c.evaluate(static_cast<double>(i) * step_s);
    return c;
}

}  // namespace detail

inline F0Contour sinusoidal_contour(double alpha, double phi, double duration_s = 5.0, double step_s = 0.01) {
    using namespace contour_range;
    detail::require_range(alpha, kAlphaMin, kAlphaMax, "alpha");
    detail::require_range(phi, kPhaseMin, kPhaseMax, "phi");
    ContourParams p;
    p.alpha = alpha;
    p.phi = phi;
    return detail::sample_contour(Mechanism::Sinusoidal, p, duration_s, step_s);
}

inline F0Contour complicated_contour(double alpha1, double alpha2, double beta1, double beta2,
                                     double duration_s = 5.0, double step_s = 0.01) {
    using namespace contour_range;
    detail::require_range(alpha1, kAlphaPairMin, kAlphaPairMax, "alpha1");
    detail::require_range(alpha2, kAlphaPairMin, kAlphaPairMax, "alpha2");
    detail::require_range(beta1, kPhaseMin, kPhaseMax, "beta1");
    detail::require_range(beta2, kPhaseMin, kPhaseMax, "beta2");
    ContourParams p;
    p.alpha1 = alpha1;
    p.alpha2 = alpha2;
    p.beta1 = beta1;
    p.beta2 = beta2;
    return detail::sample_contour(Mechanism::Complicated, p, duration_s, step_s);
}

inline F0Contour constant_contour(double f0_hz, double duration_s, double step_s = 0.01) {
    if (!(f0_hz > 0.0)) throw Error(ErrorCode::ParamOutOfRange, "constant f0 must be positive");
    ContourParams p;
    p.constant_hz = f0_hz;
    return detail::sample_contour(Mechanism::Constant, p, duration_s, step_s);
}

struct GlottalPulseTrain {
    AudioBuffer audio;
    std::size_t cycles = 0;  // number of cycle onsets inside the buffer
};

/// Rosenberg glottal flow, differentiated to include lip radiation. The cycle phase is
/// accumulated sample by sample from the interpolated contour.
inline GlottalPulseTrain glottal_pulse_train(const F0Contour& contour, int sample_rate_hz, double open_quotient = 0.6) {
    if (!(open_quotient > 0.0 && open_quotient < 1.0)) {
        throw Error(ErrorCode::ParamOutOfRange, "open quotient must lie in (0, 1)");
    }
    const double rise = open_quotient * 2.0 / 3.0;
    const double fall = open_quotient - rise;
    auto flow = [&](double u) {
        if (u < rise) return 0.5 * (1.0 - std::cos(M_PI * u / rise));
        if (u < open_quotient) return std::cos(0.5 * M_PI * (u - rise) / fall);
        return 0.0;
    };

    GlottalPulseTrain out;
    out.audio.sample_rate_hz = sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(contour.duration_s * sample_rate_hz));
    out.audio.samples.resize(n);

    double phase = 0.0;  // in cycles, [0, 1)
    double prev_flow = 0.0;
    out.cycles = n > 0 ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double g = flow(phase);
        out.audio.samples[i] = g - prev_flow;
        prev_flow = g;

        const double f0 = contour.at(static_cast<double>(i) / sample_rate_hz);
        if (f0 >= sample_rate_hz / 2.0) throw Error(ErrorCode::ParamOutOfRange, "f0 at or above Nyquist");
        phase += f0 / sample_rate_hz;
        if (phase >= 1.0) {
            phase -= 1.0;
            if (i + 1 < n) ++out.cycles;
        }
    }
    return out;
}

inline AudioBuffer glottal_source(const F0Contour& contour, int sample_rate_hz, double open_quotient = 0.6) {
    return glottal_pulse_train(contour, sample_rate_hz, open_quotient).audio;
}

struct Formant {
    double frequency_hz;
    double bandwidth_hz;
};

using FormantSet = std::array<Formant, 4>;

inline double resonator_pole_radius(double bandwidth_hz, int sample_rate_hz) {
    return std::exp(-M_PI * bandwidth_hz / sample_rate_hz);
}

inline void validate_formants(const FormantSet& formants, int sample_rate_hz) {
    double prev = 0.0;
    for (const auto& f : formants) {
        if (!(f.frequency_hz > prev)) throw Error(ErrorCode::ParamOutOfRange, "formant frequencies must increase strictly");
        if (!(f.frequency_hz < sample_rate_hz / 2.0)) throw Error(ErrorCode::ParamOutOfRange, "formant above Nyquist");
        if (!(f.bandwidth_hz > 0.0)) throw Error(ErrorCode::ParamOutOfRange, "formant bandwidth must be positive");
        prev = f.frequency_hz;
    }
}

/// Cascade of four unity-DC-gain two-pole resonators, then peak normalization to 0.9.
inline AudioBuffer vocal_tract_filter(const AudioBuffer& source, const FormantSet& formants) {
    const int rate = source.sample_rate_hz;
    validate_formants(formants, rate);

    AudioBuffer out = source;
    for (const auto& f : formants) {
        const double r = resonator_pole_radius(f.bandwidth_hz, rate);
        if (!(r < 1.0)) throw Error(ErrorCode::UnstableFilter, "pole radius >= 1");
        const double theta = 2.0 * M_PI * f.frequency_hz / rate;
        const double a1 = 2.0 * r * std::cos(theta);
        const double a2 = -r * r;
        const double b0 = 1.0 - a1 - a2;
        double y1 = 0.0;
        double y2 = 0.0;
        for (double& s : out.samples) {
            const double y = b0 * s + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            s = y;
        }
    }

    double peak = 0.0;
    for (double s : out.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0) {
        const double scale = 0.9 / peak;
        for (double& s : out.samples) s *= scale;
    }
    return out;
}

/// Everything needed to re-render one utterance.
struct StimulusSpec {
    std::size_t index = 0;
    F0Contour contour;
    FormantSet formants{};
    double open_quotient = 0.6;
    double gain = 1.0;
    std::uint64_t rng_seed = 0;
};

inline AudioBuffer render(const StimulusSpec& spec, int sample_rate_hz = kCanonicalRateHz) {
    auto audio = vocal_tract_filter(glottal_source(spec.contour, sample_rate_hz, spec.open_quotient), spec.formants);
    if (spec.gain != 1.0) {
        for (double& s : audio.samples) s *= spec.gain;
    }
    return audio;
}

struct Stimulus {
    StimulusSpec spec;
    AudioBuffer audio;
};

/// Sampling ranges for the non-pitch parameters.
struct SynthOptions {
    int sample_rate_hz = kCanonicalRateHz;
    double step_s = 0.01;
    double open_quotient = 0.6;
    bool sample_open_quotient = false;
    double open_quotient_min = 0.4;
    double open_quotient_max = 0.8;
    std::array<std::array<double, 2>, 4> formant_ranges_hz{{{300, 900}, {900, 2500}, {2200, 3200}, {3200, 4200}}};
    std::array<double, 2> bandwidth_range_hz{60, 160};
    double min_formant_spacing_hz = 100.0;
};

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for stream `index` under `master`; independent of generation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Portable uniform draws on top of mt19937_64 (distribution objects differ across standard libraries).
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : engine_(seed) {}
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double operator()(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::uint64_t bits() { return engine_(); }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(unit() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

inline StimulusSpec sample_stimulus(Mechanism mechanism, std::size_t index, double duration_s,
                                    std::uint64_t master_seed, const SynthOptions& opt = {}) {
    using namespace contour_range;
    StimulusSpec spec;
    spec.index = index;
    spec.rng_seed = derive_seed(master_seed, index);
    Uniform u(spec.rng_seed);

    switch (mechanism) {
    case Mechanism::Sinusoidal: {
        const double alpha = u(kAlphaMin, kAlphaMax);
        const double phi = u(kPhaseMin, kPhaseMax);
        spec.contour = sinusoidal_contour(alpha, phi, duration_s, opt.step_s);
        break;
    }
    case Mechanism::Complicated: {
        const double a1 = u(kAlphaPairMin, kAlphaPairMax);
        const double b1 = u(kPhaseMin, kPhaseMax);
        const double a2 = u(kAlphaPairMin, kAlphaPairMax);
        const double b2 = u(kPhaseMin, kPhaseMax);
        spec.contour = complicated_contour(a1, a2, b1, b2, duration_s, opt.step_s);
        break;
    }
    case Mechanism::Constant:
        spec.contour = constant_contour(u(kF0FloorHz, kF0CeilingHz), duration_s, opt.step_s);
        break;
    }

    // Redraw until the four formants are strictly ordered with the minimum spacing.
    for (;;) {
        bool ordered = true;
        for (std::size_t k = 0; k < 4; ++k) {
            spec.formants[k].frequency_hz = u(opt.formant_ranges_hz[k][0], opt.formant_ranges_hz[k][1]);
            if (k > 0 && spec.formants[k].frequency_hz < spec.formants[k - 1].frequency_hz + opt.min_formant_spacing_hz) {
                ordered = false;
            }
        }
        if (ordered) break;
    }
    for (auto& f : spec.formants) f.bandwidth_hz = u(opt.bandwidth_range_hz[0], opt.bandwidth_range_hz[1]);

    spec.open_quotient = opt.sample_open_quotient ? u(opt.open_quotient_min, opt.open_quotient_max) : opt.open_quotient;
    return spec;
}

/// Renders `n` utterances. Utterance i depends only on (master_seed, i).
inline std::vector<Stimulus> generate_corpus(Mechanism mechanism, std::size_t n = 60, double duration_s = 5.0,
                                             std::uint64_t master_seed = 0, const SynthOptions& opt = {},
                                             std::size_t jobs = 1) {
    if (n == 0) throw Error(ErrorCode::EmptyCorpus, "corpus needs at least one utterance");
    std::vector<Stimulus> corpus(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        corpus[i].spec = sample_stimulus(mechanism, i, duration_s, master_seed, opt);
        corpus[i].audio = render(corpus[i].spec, opt.sample_rate_hz);
    });
    return corpus;
}

}  // namespace pitchcov
