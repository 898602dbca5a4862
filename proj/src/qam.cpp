#include "asipsim/qam.hpp"

#include <cmath>

namespace asip {
namespace qam64 {

namespace {

// 3-bit Gray code -> amplitude level index 0..7, level = 2*idx - 7
constexpr int kGrayToLevel[8] = {0, 1, 3, 2, 7, 6, 4, 5};

const double kScale = 1.0 / std::sqrt(42.0);

double axis(unsigned gray3) { return (2 * kGrayToLevel[gray3 & 7] - 7) * kScale; }

} // namespace

std::complex<double> modulate(unsigned bits) {
    return {axis((bits >> 3) & 7), axis(bits & 7)};
}

std::complex<double> point(unsigned index) { return modulate(index & 63); }

unsigned demodulate(std::complex<double> y) {
    unsigned best = 0;
    double best_d2 = -1.0;
    for (unsigned s = 0; s < kPoints; ++s) {
        std::complex<double> p = point(s);
        double d2 = std::norm(y - p);
        if (best_d2 < 0.0 || d2 < best_d2) {
            best_d2 = d2;
            best = s;
        }
    }
    return best;
}

} // namespace qam64
} // namespace asip
