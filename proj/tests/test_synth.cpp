#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pitchcov/fft.hpp"
#include "pitchcov/pitch.hpp"
#include "pitchcov/synth.hpp"

using namespace pitchcov;

TEST(Contour, SinusoidalCenterAtOrigin) {
    const auto c = sinusoidal_contour(3.0, 0.0);
    EXPECT_DOUBLE_EQ(c.evaluate(0.0), 232.0);
    EXPECT_DOUBLE_EQ(c.f0_hz.front(), 232.0);
    EXPECT_EQ(c.f0_hz.size(), 501u);
}

TEST(Contour, SinusoidalPeriodicity) {
    const auto c = sinusoidal_contour(2.0 * M_PI, 0.0);
    EXPECT_NEAR(c.evaluate(1.0), c.evaluate(0.0), 1e-9);
    EXPECT_NEAR(c.at(1.0), c.at(0.0), 1e-9);
}

TEST(Contour, ComplicatedAtOrigin) {
    const auto c = complicated_contour(1.0, 2.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(c.evaluate(0.0), 318.0);
}

TEST(Contour, ComplicatedPhasorIdentity) {
    const double a = 2.5;
    const auto c = complicated_contour(a, a, 0.0, 0.0);
    for (double t = 0.0; t <= 5.0; t += 0.137) {
        EXPECT_NEAR(c.evaluate(t), 232.0 + 86.0 * std::sqrt(2.0) * std::sin(a * t + M_PI / 4.0), 1e-9);
    }
}

TEST(Contour, BoundsOverManyDraws) {
    for (auto m : {Mechanism::Sinusoidal, Mechanism::Complicated}) {
        double lo = 1e9, hi = -1e9;
        for (std::size_t i = 0; i < 10000; ++i) {
            const auto s = sample_stimulus(m, i, 5.0, 99);
            const auto [mn, mx] = std::minmax_element(s.contour.f0_hz.begin(), s.contour.f0_hz.end());
            lo = std::min(lo, *mn);
            hi = std::max(hi, *mx);
        }
        EXPECT_GE(lo, 60.0) << to_string(m);
        EXPECT_LE(hi, 404.0) << to_string(m);
    }
}

TEST(Contour, ParametersOutOfRangeRejected) {
    auto expect_range = [](auto&& fn) {
        try {
            fn();
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ParamOutOfRange);
        }
    };
    expect_range([] { sinusoidal_contour(1.0, 0.0); });
    expect_range([] { sinusoidal_contour(3.0, 2.0); });
    expect_range([] { complicated_contour(4.0, 1.0, 0.0, 0.0); });
    expect_range([] { complicated_contour(1.0, 1.0, 0.0, -2.0); });
    expect_range([] { sinusoidal_contour(3.0, 0.0, -1.0); });
    expect_range([] { constant_contour(0.0, 1.0); });
}

TEST(Contour, InterpolationBetweenSamples) {
    const auto c = sinusoidal_contour(3.0, 0.5, 1.0);
    EXPECT_DOUBLE_EQ(c.at(0.015), 0.5 * (c.f0_hz[1] + c.f0_hz[2]));
    EXPECT_DOUBLE_EQ(c.at(-1.0), c.f0_hz.front());
    EXPECT_DOUBLE_EQ(c.at(9.0), c.f0_hz.back());
}

TEST(Glottal, ConstantHundredHertzGivesHundredCycles) {
    const auto p = glottal_pulse_train(constant_contour(100.0, 1.0), 16000);
    EXPECT_EQ(p.audio.size(), 16000u);
    EXPECT_EQ(p.cycles, 100u);
}

TEST(Glottal, CycleCountMatchesIntegratedF0) {
    for (std::size_t i = 0; i < 8; ++i) {
        const auto s = sample_stimulus(i % 2 ? Mechanism::Complicated : Mechanism::Sinusoidal, i, 2.0, 5);
        const auto p = glottal_pulse_train(s.contour, 16000);
        double integral = 0.0;
        for (std::size_t k = 0; k < p.audio.size(); ++k) integral += s.contour.at(k / 16000.0) / 16000.0;
        EXPECT_LE(std::abs(static_cast<double>(p.cycles) - std::round(integral)), 1.0) << i;
    }
}

TEST(Glottal, ZeroDurationIsEmpty) {
    const auto p = glottal_pulse_train(constant_contour(100.0, 0.0), 16000);
    EXPECT_TRUE(p.audio.empty());
    EXPECT_EQ(p.cycles, 0u);
}

TEST(Glottal, SourceIsDifferentiatedFlow) {
    // The derivative of a closed pulse sums to zero over each cycle.
    const auto a = glottal_source(constant_contour(100.0, 1.0), 16000);
    double s = 0.0;
    for (std::size_t i = 0; i < 160; ++i) s += a.samples[i];
    EXPECT_NEAR(s, 0.0, 1e-12);
    EXPECT_THROW(glottal_source(constant_contour(100.0, 1.0), 16000, 1.0), Error);
}

TEST(Resonator, PoleRadius) {
    EXPECT_NEAR(resonator_pole_radius(80.0, 16000), std::exp(-M_PI * 80.0 / 16000.0), 1e-15);
    EXPECT_NEAR(resonator_pole_radius(80.0, 16000), 0.98441, 5e-6);
}

TEST(Resonator, ImpulseResponsePeaksAtFormants) {
    const FormantSet fs{{{700.0, 80.0}, {1220.0, 90.0}, {2600.0, 120.0}, {3700.0, 150.0}}};
    AudioBuffer imp;
    imp.samples.assign(16384, 0.0);
    imp.samples[0] = 1.0;
    const auto h = vocal_tract_filter(imp, fs);
    const auto spec = rfft(h.samples);
    std::vector<double> mag(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) mag[k] = std::abs(spec[k]);
    const double bin_hz = 16000.0 / 16384.0;
    for (const auto& f : fs) {
        bool found = false;
        for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
            const double hz = static_cast<double>(k) * bin_hz;
            if (std::abs(hz - f.frequency_hz) <= 20.0 && mag[k] >= mag[k - 1] && mag[k] >= mag[k + 1]) found = true;
        }
        EXPECT_TRUE(found) << f.frequency_hz;
    }
}

TEST(Resonator, ZeroInZeroOut) {
    AudioBuffer z;
    z.samples.assign(1000, 0.0);
    const FormantSet fs{{{700.0, 80.0}, {1220.0, 90.0}, {2600.0, 120.0}, {3700.0, 150.0}}};
    EXPECT_EQ(vocal_tract_filter(z, fs).samples, z.samples);
}

TEST(Resonator, InvalidFormantsRejected) {
    AudioBuffer x;
    x.samples.assign(10, 1.0);
    FormantSet unordered{{{1200.0, 80.0}, {700.0, 90.0}, {2600.0, 120.0}, {3700.0, 150.0}}};
    EXPECT_THROW(vocal_tract_filter(x, unordered), Error);
    FormantSet nyquist{{{700.0, 80.0}, {1200.0, 90.0}, {2600.0, 120.0}, {8100.0, 150.0}}};
    EXPECT_THROW(vocal_tract_filter(x, nyquist), Error);
    FormantSet bw{{{700.0, 0.0}, {1200.0, 90.0}, {2600.0, 120.0}, {3700.0, 150.0}}};
    EXPECT_THROW(vocal_tract_filter(x, bw), Error);
}

TEST(Corpus, SixtyFiveSecondUtterancesTotalFiveMinutes) {
    const auto corpus = generate_corpus(Mechanism::Sinusoidal, 60, 5.0, 7);
    double total = 0.0;
    for (const auto& s : corpus) {
        total += s.audio.duration_s();
        double peak = 0.0;
        for (double v : s.audio.samples) peak = std::max(peak, std::abs(v));
        EXPECT_NEAR(peak, 0.9, 1e-12);
    }
    EXPECT_DOUBLE_EQ(total, 300.0);
}

TEST(Corpus, DeterministicAndOrderIndependent) {
    const auto a = generate_corpus(Mechanism::Complicated, 5, 1.0, 3, {}, 1);
    const auto b = generate_corpus(Mechanism::Complicated, 5, 1.0, 3, {}, 4);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a[i].audio, b[i].audio);
        // Utterance i depends only on (seed, i).
        const auto single = sample_stimulus(Mechanism::Complicated, i, 1.0, 3);
        EXPECT_EQ(render(single), a[i].audio);
    }
    const auto c = generate_corpus(Mechanism::Complicated, 5, 1.0, 4);
    EXPECT_NE(a[0].audio, c[0].audio);
}

TEST(Corpus, FormantsOrderedAndSpaced) {
    for (std::size_t i = 0; i < 500; ++i) {
        const auto s = sample_stimulus(Mechanism::Sinusoidal, i, 0.1, 8);
        for (std::size_t k = 1; k < 4; ++k) {
            EXPECT_GE(s.formants[k].frequency_hz, s.formants[k - 1].frequency_hz + 100.0);
        }
        for (const auto& f : s.formants) {
            EXPECT_GE(f.bandwidth_hz, 60.0);
            EXPECT_LE(f.bandwidth_hz, 160.0);
        }
    }
}

TEST(Corpus, EmptyRejected) {
    try {
        generate_corpus(Mechanism::Sinusoidal, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyCorpus);
    }
}

TEST(Corpus, TrackerRecoversCommandedContour) {
    for (auto m : {Mechanism::Sinusoidal, Mechanism::Complicated}) {
        const auto corpus = generate_corpus(m, 4, 5.0, 21);
        for (const auto& s : corpus) {
            const auto t = track_f0(s.audio);
            std::vector<double> err;
            for (std::size_t i = 0; i < t.frames(); ++i) {
                if (t.voiced[i]) err.push_back(std::abs(hz_to_semitone(t.f0_hz[i], s.spec.contour.at(t.frame_times_s[i]))));
            }
            ASSERT_FALSE(err.empty());
            std::nth_element(err.begin(), err.begin() + static_cast<long>(err.size() / 2), err.end());
            EXPECT_LT(err[err.size() / 2], 0.5) << to_string(m) << " " << s.spec.index;
        }
    }
}

TEST(Mechanism, NamesRoundTrip) {
    for (auto m : {Mechanism::Sinusoidal, Mechanism::Complicated, Mechanism::Constant}) {
        EXPECT_EQ(parse_mechanism(to_string(m)), m);
    }
    EXPECT_FALSE(parse_mechanism("square").has_value());
}
