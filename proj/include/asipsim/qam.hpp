#pragma once

#include <complex>
#include <cstdint>

namespace asip {

// Gray-coded square 64-QAM with unit average power (levels +-1..+-7
// scaled by 1/sqrt(42)). Six bits per symbol: the high three bits pick
// the in-phase level, the low three the quadrature level.
namespace qam64 {

inline constexpr unsigned kBitsPerSymbol = 6;
inline constexpr unsigned kPoints = 64;

std::complex<double> modulate(unsigned bits);

// nearest constellation point; ties resolve to the lowest symbol index
unsigned demodulate(std::complex<double> y);

std::complex<double> point(unsigned index);

} // namespace qam64

} // namespace asip
