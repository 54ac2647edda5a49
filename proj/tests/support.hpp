#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pitchcov/audio_io.hpp"
#include "pitchcov/eval.hpp"

namespace testing_support {

inline pitchcov::AudioBuffer sine(double hz, double seconds, int rate = 16000, double amp = 0.5) {
    pitchcov::AudioBuffer b;
    b.sample_rate_hz = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    b.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.samples[i] = amp * std::sin(2.0 * M_PI * hz * static_cast<double>(i) / rate);
    return b;
}

/// Band-limited sawtooth (harmonics below Nyquist only). A naively sampled sawtooth
/// aliases, and for periods that are not a whole number of samples the aliases make the
/// sampled sequence periodic at a multiple of the nominal period.
inline pitchcov::AudioBuffer sawtooth(double hz, double seconds, int rate = 16000, double amp = 0.5) {
    pitchcov::AudioBuffer b;
    b.sample_rate_hz = rate;
    const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
    b.samples.assign(n, 0.0);
    const auto harmonics = static_cast<int>(std::floor(0.5 * rate / hz - 1e-9));
    for (int h = 1; h <= harmonics; ++h) {
        const double w = 2.0 * M_PI * hz * h / rate;
        const double g = -2.0 * amp / (M_PI * h) * (h % 2 ? 1.0 : -1.0);
        for (std::size_t i = 0; i < n; ++i) b.samples[i] += g * std::sin(w * static_cast<double>(i));
    }
    return b;
}

inline pitchcov::AudioBuffer white_noise(double seconds, std::uint64_t seed, int rate = 16000, double amp = 0.3) {
    pitchcov::AudioBuffer b;
    b.sample_rate_hz = rate;
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> d(-amp, amp);
    b.samples.resize(static_cast<std::size_t>(std::llround(seconds * rate)));
    for (double& s : b.samples) s = d(g);
    return b;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("pitchcov_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Corpus without audio: random 40-D features and an all-voiced pitch track. With
/// `noise` false the semitone target is the same fixed linear map of the features for
/// every corpus (weights depend only on kPlantedWeightsSeed); with `noise` true the
/// target is independent of the features.
inline constexpr std::uint64_t kPlantedWeightsSeed = 0x5eed;

inline pitchcov::Corpus planted_corpus(const std::string& name, std::uint64_t seed, bool noise = false,
                                       std::size_t utterances = 20, std::size_t frames = 100, std::size_t dims = 40) {
    std::mt19937_64 wg(kPlantedWeightsSeed);
    std::normal_distribution<double> nd;
    std::vector<double> w(dims);
    for (double& v : w) v = 3.0 * nd(wg) / std::sqrt(static_cast<double>(dims));
    const double b = 4.0;

    std::mt19937_64 g(seed);
    pitchcov::Corpus c;
    c.name = name;
    for (std::size_t u = 0; u < utterances; ++u) {
        pitchcov::Utterance utt;
        utt.id = name + "_" + std::to_string(u);
        utt.mfcc.coeffs = pitchcov::Matrix(frames, dims);
        for (std::size_t f = 0; f < frames; ++f) {
            const double t = 0.0175 + 0.01 * static_cast<double>(f);
            double y = b;
            for (std::size_t d = 0; d < dims; ++d) {
                utt.mfcc.coeffs(f, d) = nd(g);
                y += w[d] * utt.mfcc.coeffs(f, d);
            }
            if (noise) y = b + 3.0 * nd(g);
            utt.mfcc.frame_times_s.push_back(t);
            utt.pitch.frame_times_s.push_back(t);
            utt.pitch.f0_hz.push_back(150.0 * std::exp2(y / 12.0));
            utt.pitch.voiced.push_back(true);
        }
        c.utterances.push_back(std::move(utt));
    }
    return c;
}

}  // namespace testing_support
