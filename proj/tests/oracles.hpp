#pragma once

// Test-side reference implementations. These deliberately take different
// computation paths than the library (binary32/binary64 host arithmetic,
// direct loops) so that agreement is evidence, not tautology.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "asipsim/bf16.hpp"

namespace oracle {

// Round a binary64 value to bfloat16 with round-to-nearest-even and
// flush-to-zero, using frexp/floor arithmetic rather than bit tricks.
inline asip::Bf16 round_bf16(double v) {
    using asip::Bf16;
    if (std::isnan(v)) return Bf16::from_bits(Bf16::kCanonicalNan);
    bool sign = std::signbit(v);
    if (v == 0.0) return Bf16::from_bits(sign ? 0x8000 : 0x0000);
    if (std::isinf(v)) return Bf16::from_bits(sign ? Bf16::kNegInf : Bf16::kPosInf);
    double av = std::fabs(v);
    int e;
    double frac = std::frexp(av, &e); // av = frac * 2^e, frac in [0.5, 1)
    // significand scaled to [128, 256)
    double scaled = std::ldexp(frac, 8);
    double mi = std::floor(scaled);
    double rem = scaled - mi;
    long m = static_cast<long>(mi);
    if (rem > 0.5 || (rem == 0.5 && (m & 1))) ++m;
    int exp = e - 8; // value = m * 2^exp
    if (m == 256) {
        m = 128;
        ++exp;
    }
    int e_field = exp + 134;
    if (e_field >= 0xFF) return Bf16::from_bits(sign ? Bf16::kNegInf : Bf16::kPosInf);
    if (e_field <= 0) return Bf16::from_bits(sign ? 0x8000 : 0x0000);
    return Bf16::from_bits(static_cast<uint16_t>((sign ? 0x8000 : 0) | (e_field << 7) | (m & 0x7F)));
}

// "Convert to binary32, operate, round to nearest even, flush subnormals."
inline asip::Bf16 add(asip::Bf16 a, asip::Bf16 b) {
    return round_bf16(static_cast<double>(a.to_f32() + b.to_f32()));
}
inline asip::Bf16 sub(asip::Bf16 a, asip::Bf16 b) {
    return round_bf16(static_cast<double>(a.to_f32() - b.to_f32()));
}
inline asip::Bf16 mul(asip::Bf16 a, asip::Bf16 b) {
    return round_bf16(static_cast<double>(a.to_f32() * b.to_f32()));
}

inline asip::CBf16 cmul(asip::CBf16 a, asip::CBf16 b) {
    asip::Bf16 rr = oracle::mul(a.re, b.re);
    asip::Bf16 ii = oracle::mul(a.im, b.im);
    asip::Bf16 ri = oracle::mul(a.re, b.im);
    asip::Bf16 ir = oracle::mul(a.im, b.re);
    return {oracle::sub(rr, ii), oracle::add(ri, ir)};
}

} // namespace oracle
