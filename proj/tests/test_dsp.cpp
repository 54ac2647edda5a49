#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "pitchcov/dsp.hpp"
#include "pitchcov/fft.hpp"
#include "support.hpp"

using namespace pitchcov;
using testing_support::sine;
using testing_support::white_noise;

namespace {

std::vector<Complex> brute_dft(const std::vector<Complex>& x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            // Reduce the index product mod n so the angle stays small and exact.
            const double ang = -2.0 * M_PI * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += x[t] * Complex(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

double max_norm(const std::vector<Complex>& v) {
    double m = 0.0;
    for (auto c : v) m = std::max(m, std::abs(c));
    return m;
}

}  // namespace

TEST(Fft, MatchesBruteForceDft) {
    std::mt19937_64 g(5);
    std::normal_distribution<double> d;
    for (std::size_t n = 1; n <= 1024; n *= 2) {
        std::vector<Complex> x(n);
        for (auto& c : x) c = Complex(d(g), d(g));
        const auto want = brute_dft(x);
        auto got = x;
        fft_inplace(got);
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(got[k] - want[k]));
        EXPECT_LE(err, 1e-9 * max_norm(want)) << "n=" << n;
    }
}

TEST(Fft, RealInputMatchesComplexFft) {
    std::mt19937_64 g(6);
    std::normal_distribution<double> d;
    for (std::size_t n : {2u, 4u, 8u, 64u, 1024u}) {
        std::vector<double> x(n);
        for (double& v : x) v = d(g);
        std::vector<Complex> cx(x.begin(), x.end());
        const auto want = brute_dft(cx);
        const auto got = rfft(x);
        ASSERT_EQ(got.size(), n / 2 + 1);
        for (std::size_t k = 0; k <= n / 2; ++k) EXPECT_LE(std::abs(got[k] - want[k]), 1e-9 * max_norm(want));
    }
}

TEST(Fft, Parseval) {
    std::mt19937_64 g(7);
    std::normal_distribution<double> d;
    for (std::size_t n : {16u, 256u, 1024u}) {
        std::vector<Complex> x(n);
        double time_energy = 0.0;
        for (auto& c : x) {
            c = Complex(d(g), d(g));
            time_energy += std::norm(c);
        }
        fft_inplace(x);
        double freq_energy = 0.0;
        for (auto c : x) freq_energy += std::norm(c);
        EXPECT_NEAR(freq_energy / static_cast<double>(n), time_energy, 1e-9 * time_energy);
    }
}

TEST(Fft, ImpulseAndConstant) {
    std::vector<Complex> x(8, 0.0);
    x[0] = 1.0;
    fft_inplace(x);
    for (auto c : x) EXPECT_NEAR(std::abs(c - Complex(1.0)), 0.0, 1e-15);
    std::vector<double> ones(8, 1.0);
    const auto s = rfft(ones);
    EXPECT_NEAR(s[0].real(), 8.0, 1e-12);
    for (std::size_t k = 1; k < s.size(); ++k) EXPECT_NEAR(std::abs(s[k]), 0.0, 1e-12);
}

TEST(Fft, NonPowerOfTwoRejected) {
    std::vector<Complex> x(6);
    EXPECT_THROW(fft_inplace(x), Error);
    std::vector<double> r(12);
    EXPECT_THROW(rfft(r), Error);
    EXPECT_EQ(next_power_of_two(560), 1024u);
    EXPECT_EQ(next_power_of_two(1024), 1024u);
}

TEST(PowerSpectrum, ParsevalWithPadding) {
    std::mt19937_64 g(8);
    std::normal_distribution<double> d;
    std::vector<double> frame(560);
    double e = 0.0;
    for (double& v : frame) {
        v = d(g);
        e += v * v;
    }
    const auto p = power_spectrum(frame, 1024);
    ASSERT_EQ(p.size(), 513u);
    double s = p.front() + p.back();
    for (std::size_t k = 1; k + 1 < p.size(); ++k) s += 2.0 * p[k];
    EXPECT_NEAR(s / 1024.0, e, 1e-9 * e);
    EXPECT_THROW(power_spectrum(frame, 512), Error);
}

TEST(Dct, Orthonormal) {
    const auto d = dct2_matrix(40, 40);
    double worst = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = 0; j < 40; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < 40; ++k) dot += d(i, k) * d(j, k);
            worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(Framing, FiveSecondsGives497Frames) {
    const FrameSpec spec;
    EXPECT_EQ(spec.window_length(16000), 560u);
    EXPECT_EQ(spec.step_length(16000), 160u);
    EXPECT_EQ(spec.fft_length(16000), 1024u);
    EXPECT_EQ(frame_count(80000, 560, 160), 497u);
    const auto m = mfcc(sine(200.0, 5.0));
    EXPECT_EQ(m.frames(), 497u);
    EXPECT_EQ(m.dims(), 40u);
    EXPECT_DOUBLE_EQ(m.frame_times_s.front(), 0.0175);
    EXPECT_NEAR(m.frame_times_s.back(), 0.0175 + 496 * 0.01, 1e-12);
}

TEST(Framing, ShortInputGivesNoFrames) {
    EXPECT_EQ(frame_count(559, 560, 160), 0u);
    EXPECT_EQ(frame_count(560, 560, 160), 1u);
    const auto m = mfcc(sine(200.0, 0.01));
    EXPECT_EQ(m.frames(), 0u);
}

TEST(Framing, HannIsPeriodic) {
    const auto w = hann_window(8);
    EXPECT_DOUBLE_EQ(w[0], 0.0);
    EXPECT_NEAR(w[4], 1.0, 1e-15);
    EXPECT_NEAR(w[2], 0.5, 1e-15);
    EXPECT_NEAR(w[6], 0.5, 1e-15);
}

TEST(Mel, SlaneyScale) {
    EXPECT_DOUBLE_EQ(hz_to_mel(0.0), 0.0);
    EXPECT_NEAR(hz_to_mel(1000.0), 15.0, 1e-12);
    EXPECT_NEAR(hz_to_mel(500.0), 7.5, 1e-12);
    // 27 mels above the break is a factor of 6.4 in frequency.
    EXPECT_NEAR(mel_to_hz(42.0), 6400.0, 1e-9);
    for (double hz : {10.0, 440.0, 999.0, 1001.0, 3000.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9 * hz);
}

TEST(Mel, FilterbankShape) {
    const FrameSpec spec;
    const auto fb = mel_filterbank(spec, 16000);
    ASSERT_EQ(fb.rows(), 40u);
    ASSERT_EQ(fb.cols(), 513u);
    const double mel_hi = hz_to_mel(8000.0);
    for (std::size_t m = 0; m < 40; ++m) {
        const double lo = mel_to_hz(mel_hi * static_cast<double>(m) / 41.0);
        const double hi = mel_to_hz(mel_hi * static_cast<double>(m + 2) / 41.0);
        double peak = 0.0;
        for (std::size_t k = 0; k < 513; ++k) {
            const double f = k * 16000.0 / 1024.0;
            ASSERT_GE(fb(m, k), 0.0);
            if (f <= lo || f >= hi) {
                ASSERT_EQ(fb(m, k), 0.0) << m << " " << k;
            }
            peak = std::max(peak, fb(m, k));
        }
        EXPECT_GT(peak, 0.0) << m;
        EXPECT_LE(peak, 2.0 / (hi - lo) + 1e-15);
    }
}

TEST(Mfcc, GainShiftsOnlyC0) {
    const auto x = white_noise(1.0, 9);
    auto y = x;
    const double g = 0.25;
    for (double& s : y.samples) s *= g;
    const auto a = mfcc(x);
    const auto b = mfcc(y);
    ASSERT_EQ(a.frames(), b.frames());
    const double shift = 2.0 * std::log(g) * std::sqrt(40.0);
    for (std::size_t f = 0; f < a.frames(); ++f) {
        EXPECT_NEAR(b.coeffs(f, 0) - a.coeffs(f, 0), shift, 1e-6);
        for (std::size_t c = 1; c < 40; ++c) ASSERT_NEAR(b.coeffs(f, c), a.coeffs(f, c), 1e-6);
    }
}

TEST(Mfcc, SilenceHitsLogFloor) {
    AudioBuffer silence;
    silence.samples.assign(16000, 0.0);
    const auto m = mfcc(silence);
    for (std::size_t f = 0; f < m.frames(); ++f) {
        EXPECT_NEAR(m.coeffs(f, 0), std::log(1e-10) * std::sqrt(40.0), 1e-9);
        for (std::size_t c = 1; c < 40; ++c) EXPECT_NEAR(m.coeffs(f, c), 0.0, 1e-9);
    }
}

TEST(Mfcc, ToneEnergyLandsInItsBand) {
    // The DCT is orthonormal, so its transpose recovers the log-mel energies.
    const double tone = 2000.0;
    const auto m = mfcc(sine(tone, 0.2));
    const auto d = dct2_matrix(40, 40);
    const double mel_hi = hz_to_mel(8000.0);
    std::vector<double> log_mel(40, 0.0);
    for (std::size_t b = 0; b < 40; ++b) {
        for (std::size_t c = 0; c < 40; ++c) log_mel[b] += d(c, b) * m.coeffs(5, c);
    }
    const auto best = static_cast<std::size_t>(std::max_element(log_mel.begin(), log_mel.end()) - log_mel.begin());
    EXPECT_LE(mel_to_hz(mel_hi * static_cast<double>(best) / 41.0), tone);
    EXPECT_GE(mel_to_hz(mel_hi * static_cast<double>(best + 2) / 41.0), tone);
}

TEST(Mfcc, ValidationErrors) {
    FrameSpec bad;
    bad.n_mfcc = 41;
    EXPECT_THROW(mfcc(sine(100.0, 0.1), bad), Error);
    FrameSpec small_fft;
    small_fft.n_fft = 512;
    EXPECT_THROW(mfcc(sine(100.0, 0.1), small_fft), Error);
    FrameSpec high;
    high.fmax_hz = 9000.0;
    EXPECT_THROW(mfcc(sine(100.0, 0.1), high), Error);
    MfccExtractor ex(FrameSpec{}, 16000);
    EXPECT_THROW(ex(sine(100.0, 0.1, 8000)), Error);
}

TEST(Mfcc, FewerCoefficientsArePrefix) {
    FrameSpec s13;
    s13.n_mfcc = 13;
    const auto x = white_noise(0.3, 2);
    const auto a = mfcc(x);
    const auto b = mfcc(x, s13);
    ASSERT_EQ(b.dims(), 13u);
    for (std::size_t f = 0; f < a.frames(); ++f) {
        for (std::size_t c = 0; c < 13; ++c) EXPECT_DOUBLE_EQ(a.coeffs(f, c), b.coeffs(f, c));
    }
}
