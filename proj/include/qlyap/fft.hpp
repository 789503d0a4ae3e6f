#pragma once

#include <complex>
#include <span>

namespace qlyap::fft {

// In-place complex DFT over the whole span. Plans are created once per size
// (FFTW_ESTIMATE, so the arithmetic is fixed for a given size) and shared
// between threads; execution is thread-safe.
void forward(std::span<std::complex<double>> data);

// Inverse transform, scaled by 1/n so that inverse(forward(v)) == v.
void inverse(std::span<std::complex<double>> data);

// Unscaled backward transform (n * inverse) for callers that fold 1/n into a
// pointwise factor.
void backward(std::span<std::complex<double>> data);

}  // namespace qlyap::fft
