// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vocalplan::detail {

/// Real-to-complex DFT of arbitrary length. Returns n/2 + 1 bins.
/// Plans are cached per length; execution is safe from multiple threads.
std::vector<std::complex<double>> real_dft(std::span<const double> input);

}  // namespace vocalplan::detail
