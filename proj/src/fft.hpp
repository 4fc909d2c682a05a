#pragma once

#include <complex>
#include <vector>

namespace psp::detail {

// Unnormalized forward DFT.
std::vector<std::complex<double>> forward_dft(const std::vector<std::complex<double>>& in);
// Inverse DFT scaled by 1/N.
std::vector<std::complex<double>> inverse_dft(const std::vector<std::complex<double>>& in);

}  // namespace psp::detail
