#pragma once

#include <complex>
#include <span>
#include <vector>

namespace waverobe {

/// In-place unnormalized DFT. Forward uses exp(-2 pi i jk/N), backward
/// exp(+2 pi i jk/N). Safe to call concurrently.
void fft_inplace(std::span<std::complex<double>> data, bool backward = false);

inline std::vector<std::complex<double>> fft(std::vector<std::complex<double>> data,
                                             bool backward = false) {
  fft_inplace(data, backward);
  return data;
}

std::size_t next_pow2(std::size_t n);

}  // namespace waverobe
