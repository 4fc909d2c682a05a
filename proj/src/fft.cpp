#include "fft.hpp"

#include <unsupported/Eigen/FFT>

namespace psp::detail {

std::vector<std::complex<double>> forward_dft(const std::vector<std::complex<double>>& in) {
    if (in.empty()) return {};
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> out;
    fft.fwd(out, in);
    return out;
}

std::vector<std::complex<double>> inverse_dft(const std::vector<std::complex<double>>& in) {
    if (in.empty()) return {};
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> out;
    fft.inv(out, in);
    return out;
}

}  // namespace psp::detail
