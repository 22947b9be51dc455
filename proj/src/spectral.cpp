#include "mamnet/spectral.hpp"

#include <cmath>
#include <numbers>

#include "mamnet/error.hpp"

namespace mamnet {

namespace {

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative Cooley-Tukey radix-2 DIT: bit-reversal permutation, then
// butterflies with per-stage twiddles.
std::vector<std::complex<double>> fft_radix2(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    std::size_t log2n = 0;
    while ((std::size_t{1} << log2n) < n) ++log2n;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t rev = 0;
        for (std::size_t b = 0; b < log2n; ++b) {
            rev = (rev << 1) | ((i >> b) & 1);
        }
        out[rev] = x[i];
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t start = 0; start < n; start += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> even = out[start + k];
                const std::complex<double> odd = out[start + k + len / 2] * w;
                out[start + k] = even + odd;
                out[start + k + len / 2] = even - odd;
                w *= wlen;
            }
        }
    }
    return out;
}

std::vector<std::complex<double>> dft_direct(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double angle =
                -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(t) /
                static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace

std::vector<std::complex<double>> dft(const std::vector<double>& signal) {
    if (signal.empty()) throw ConfigError("dft: signal must have length >= 1");
    for (double v : signal) {
        if (!std::isfinite(v)) throw DataError("dft: non-finite input");
    }
    if (power_of_two(signal.size())) return fft_radix2(signal);
    return dft_direct(signal);
}

Tensor magnitude_bins(const std::vector<std::complex<double>>& coeffs, std::size_t k) {
    const std::size_t w = coeffs.size();
    if (k == 0 || k > w / 2 + 1) {
        throw ConfigError("magnitude_bins: k must be in [1, floor(W/2)+1]");
    }
    Tensor bins({k});
    for (std::size_t i = 0; i < k; ++i) {
        bins[i] = std::abs(coeffs[i]) / static_cast<double>(w);
    }
    return bins;
}

Spectrum column_spectra(const Tensor& window, std::size_t bins, Taper taper) {
    if (window.rank() != 2) throw ConfigError("column_spectra: window must be W x F");
    const std::size_t w = window.rows();
    const std::size_t f = window.cols();
    Spectrum s{w, bins, {}};
    s.per_feature.reserve(f);
    std::vector<double> column(w);
    for (std::size_t j = 0; j < f; ++j) {
        for (std::size_t t = 0; t < w; ++t) column[t] = window(t, j);
        if (taper == Taper::hann) {
            for (std::size_t t = 0; t < w; ++t) {
                column[t] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi *
                                                   static_cast<double>(t) /
                                                   static_cast<double>(w)));
            }
        }
        s.per_feature.push_back(magnitude_bins(dft(column), bins));
    }
    return s;
}

Tensor spectral_features(const Tensor& window, std::size_t bins, Taper taper) {
    const Spectrum s = column_spectra(window, bins, taper);
    Tensor out({s.per_feature.size() * bins});
    std::size_t pos = 0;
    for (const Tensor& feature : s.per_feature) {
        for (std::size_t i = 0; i < bins; ++i) out[pos++] = feature[i];
    }
    return out;
}

}  // namespace mamnet
