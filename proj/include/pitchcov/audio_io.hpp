#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include "pitchcov/error.hpp"

namespace pitchcov {

inline constexpr int kCanonicalRateHz = 16000;

/// Mono PCM signal with samples normalized to [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate_hz = kCanonicalRateHz;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate_hz; }

    friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

namespace detail {

inline std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_tag(std::vector<unsigned char>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

}  // namespace detail

/// Parses a RIFF/WAVE byte image. Only 16-bit integer PCM with one channel is accepted;
/// chunks other than `fmt ` and `data` are skipped.
inline AudioBuffer parse_wav(const std::vector<unsigned char>& bytes) {
    using detail::read_u16;
    using detail::read_u32;

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error(ErrorCode::MalformedWav, "missing RIFF/WAVE header");
    }

    bool have_fmt = false;
    int rate = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t size = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body) {
            throw Error(ErrorCode::MalformedWav, "chunk extends past end of file");
        }

        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (size < 16) throw Error(ErrorCode::MalformedWav, "fmt chunk too short");
            const unsigned char* f = bytes.data() + body;
            const std::uint16_t format = read_u16(f);
            const std::uint16_t channels = read_u16(f + 2);
            const std::uint32_t sr = read_u32(f + 4);
            const std::uint16_t bits = read_u16(f + 14);
            if (format != 1 || bits != 16) {
                throw Error(ErrorCode::UnsupportedFormat,
                            "only 16-bit integer PCM is supported (format " + std::to_string(format) +
                                ", " + std::to_string(bits) + " bits)");
            }
            if (channels != 1) {
                throw Error(ErrorCode::UnsupportedFormat,
                            "expected 1 channel, found " + std::to_string(channels));
            }
            if (sr == 0) throw Error(ErrorCode::MalformedWav, "zero sample rate");
            rate = static_cast<int>(sr);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (!have_fmt) throw Error(ErrorCode::MalformedWav, "data chunk before fmt chunk");
            if (size % 2 != 0) throw Error(ErrorCode::MalformedWav, "odd PCM16 data length");
            AudioBuffer buf;
            buf.sample_rate_hz = rate;
            buf.samples.resize(size / 2);
            const unsigned char* d = bytes.data() + body;
            for (std::size_t i = 0; i < buf.samples.size(); ++i) {
                const auto v = static_cast<std::int16_t>(read_u16(d + 2 * i));
                buf.samples[i] = v / 32768.0;
            }
            return buf;
        }
        pos = body + size + (size & 1u);
    }
    throw Error(ErrorCode::MalformedWav, have_fmt ? "no data chunk" : "no fmt chunk");
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_wav(bytes);
}

/// Quantizes to PCM16 (round to nearest, clipped to the int16 range).
inline std::vector<unsigned char> encode_wav(const AudioBuffer& buf) {
    using namespace detail;
    const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (double s : buf.samples) {
        const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf) {
    const auto bytes = encode_wav(buf);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

namespace detail {

inline double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = M_PI * x;
    return std::sin(px) / px;
}

inline double kaiser(double x, double beta) {
    // x in [-1, 1]
    if (std::abs(x) >= 1.0) return 0.0;
    return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - x * x)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace detail

struct ResampleParams {
    int taps_per_side = 32;       // zero crossings of the low-rate sinc on each side
    double kaiser_beta = 8.6;
    double rolloff = 0.95;        // cutoff as a fraction of the lower Nyquist
};

/// Band-limited rate conversion with a Kaiser-windowed sinc kernel. For rational ratios
/// whose up-factor is small enough, one normalized filter per phase is precomputed.
inline AudioBuffer resample(const AudioBuffer& buf, int target_rate_hz, const ResampleParams& rp = {}) {
    if (target_rate_hz <= 0) throw Error(ErrorCode::InvalidRange, "target rate must be positive");
    if (buf.sample_rate_hz == target_rate_hz) return buf;

    const long src = buf.sample_rate_hz;
    const long dst = target_rate_hz;
    const long g = std::gcd(src, dst);
    const long up = dst / g;
    const long down = src / g;

    const double scale = std::min(1.0, static_cast<double>(dst) / static_cast<double>(src));
    const double cutoff = scale * rp.rolloff;
    const double half_width = rp.taps_per_side / scale;  // in input samples
    const long hw = static_cast<long>(std::ceil(half_width));
    const long width = 2 * hw;

    const std::size_t n_in = buf.samples.size();
    const auto n_out = static_cast<std::size_t>((static_cast<long double>(n_in) * dst + src / 2) / src);

    auto build_phase = [&](double frac, std::vector<double>& taps) {
        taps.assign(static_cast<std::size_t>(width), 0.0);
        double sum = 0.0;
        for (long j = -hw + 1; j <= hw; ++j) {
            const double d = frac - static_cast<double>(j);
            const double w = cutoff * detail::sinc(cutoff * d) * detail::kaiser(d / half_width, rp.kaiser_beta);
            taps[static_cast<std::size_t>(j + hw - 1)] = w;
            sum += w;
        }
        for (double& t : taps) t /= sum;
    };

    constexpr long kMaxPhases = 4096;
    std::vector<std::vector<double>> table;
    if (up <= kMaxPhases) {
        table.resize(static_cast<std::size_t>(up));
        for (long p = 0; p < up; ++p) build_phase(static_cast<double>(p) / static_cast<double>(up), table[p]);
    }

    AudioBuffer out;
    out.sample_rate_hz = target_rate_hz;
    out.samples.resize(n_out);
    std::vector<double> scratch;
    for (std::size_t m = 0; m < n_out; ++m) {
        const long long num = static_cast<long long>(m) * down;
        const long long base = num / up;
        const long phase = static_cast<long>(num % up);
        const std::vector<double>* taps;
        if (!table.empty()) {
            taps = &table[static_cast<std::size_t>(phase)];
        } else {
            build_phase(static_cast<double>(phase) / static_cast<double>(up), scratch);
            taps = &scratch;
        }
        double acc = 0.0;
        for (long j = -hw + 1; j <= hw; ++j) {
            const long long k = base + j;
            if (k < 0 || k >= static_cast<long long>(n_in)) continue;
            acc += (*taps)[static_cast<std::size_t>(j + hw - 1)] * buf.samples[static_cast<std::size_t>(k)];
        }
        out.samples[m] = acc;
    }
    return out;
}

}  // namespace pitchcov
