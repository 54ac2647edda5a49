#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "pitchcov/error.hpp"

namespace pitchcov {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// In-place iterative radix-2 decimation-in-time FFT (forward, no scaling).
inline void fft_inplace(std::span<Complex> a) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw Error(ErrorCode::InvalidRange, "FFT length must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            // Twiddles computed directly rather than by recurrence to keep error at O(eps log n).
            const Complex w(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
            for (std::size_t i = k; i < n; i += len) {
                const Complex u = a[i];
                const Complex v = a[i + half] * w;
                a[i] = u + v;
                a[i + half] = u - v;
            }
        }
    }
}

/// Forward DFT of a real sequence of power-of-two length n, returning bins 0..n/2.
/// The input is packed into an n/2-point complex transform and split afterwards.
inline std::vector<Complex> rfft(std::span<const double> x) {
    const std::size_t n = x.size();
    if (!is_power_of_two(n)) throw Error(ErrorCode::InvalidRange, "FFT length must be a power of two");
    if (n == 1) return {Complex(x[0], 0.0)};

    const std::size_t half = n / 2;
    std::vector<Complex> z(half);
    for (std::size_t k = 0; k < half; ++k) z[k] = Complex(x[2 * k], x[2 * k + 1]);
    fft_inplace(z);

    std::vector<Complex> out(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        const Complex zk = z[k % half];
        const Complex zc = std::conj(z[(half - k) % half]);
        const Complex even = 0.5 * (zk + zc);
        const Complex odd = Complex(0.0, -0.5) * (zk - zc);
        const double ang = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        out[k] = even + Complex(std::cos(ang), std::sin(ang)) * odd;
    }
    return out;
}

}  // namespace pitchcov
