#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "mamnet/tensor.hpp"

namespace mamnet {

/// Optional taper applied to each column before the transform.
enum class Taper { rectangular, hann };

/// Discrete Fourier transform X_k = sum_t x_t e^{-i 2 pi k t / W}.
/// Power-of-two lengths take an iterative radix-2 path; anything else falls
/// back to direct summation. Throws DataError on non-finite input.
std::vector<std::complex<double>> dft(const std::vector<double>& signal);

/// First k magnitude bins, normalized by the signal length W so that a
/// constant signal of value c yields bin 0 = c and a unit-amplitude sinusoid
/// at bin k (0 < k < W/2) yields 0.5. Requires k <= floor(W/2)+1.
Tensor magnitude_bins(const std::vector<std::complex<double>>& coeffs, std::size_t k);

/// Per-feature magnitude spectra of one window. Bin frequency resolution is
/// 1/W cycles per sample; bin 0 is DC.
struct Spectrum {
    std::size_t window_len = 0;
    std::size_t bins = 0;
    std::vector<Tensor> per_feature;  // F tensors of length bins
};

Spectrum column_spectra(const Tensor& window, std::size_t bins,
                        Taper taper = Taper::rectangular);

/// Flat spectral feature vector: magnitude bins of every feature column,
/// concatenated feature-major (length F * bins).
Tensor spectral_features(const Tensor& window, std::size_t bins,
                         Taper taper = Taper::rectangular);

}  // namespace mamnet
