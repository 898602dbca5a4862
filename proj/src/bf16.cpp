#include "asipsim/bf16.hpp"

#include <bit>
#include <cmath>

namespace asip {

namespace {

constexpr uint16_t kSignMask = 0x8000u;

struct Unpacked {
    bool sign;
    int exp;      // value = mant * 2^exp
    uint32_t mant; // normalized to [128, 256) for nonzero finite values
    bool zero;
};

Unpacked unpack_finite(Bf16 x) {
    Unpacked u{};
    u.sign = x.sign();
    uint32_t f = x.fraction();
    int e = x.exponent_field();
    if (e == 0) {
        if (f == 0) {
            u.zero = true;
            return u;
        }
        // subnormal: value = f * 2^-133
        int k = 0;
        while (f < 0x80u) {
            f <<= 1;
            ++k;
        }
        u.mant = f;
        u.exp = -133 - k;
    } else {
        u.mant = 0x80u | f;
        u.exp = e - 134;
    }
    return u;
}

// Round value = mant * 2^scale_exp (mant > 0, exact) to 8 significand bits
// with round-to-nearest-even, then pack. Subnormal results flush to signed
// zero, overflow returns signed infinity.
Bf16 round_and_pack(bool sign, int scale_exp, uint64_t mant) {
    if (mant == 0) return Bf16::from_bits(sign ? kSignMask : 0);
    int h = 63 - std::countl_zero(mant);
    uint32_t m;
    int exp;
    if (h > 7) {
        int shift = h - 7;
        m = static_cast<uint32_t>(mant >> shift);
        uint64_t rem = mant & ((uint64_t{1} << shift) - 1);
        uint64_t half = uint64_t{1} << (shift - 1);
        if (rem > half || (rem == half && (m & 1))) ++m;
        exp = scale_exp + shift;
    } else {
        m = static_cast<uint32_t>(mant) << (7 - h);
        exp = scale_exp - (7 - h);
    }
    if (m == 0x100u) {
        m = 0x80u;
        ++exp;
    }
    int e_field = exp + 134;
    if (e_field >= 0xFF) return Bf16::from_bits(sign ? Bf16::kNegInf : Bf16::kPosInf);
    if (e_field <= 0) return Bf16::from_bits(sign ? kSignMask : 0); // flush to zero
    uint16_t bits = static_cast<uint16_t>((sign ? kSignMask : 0) | (e_field << 7) | (m & 0x7Fu));
    return Bf16::from_bits(bits);
}

} // namespace

Bf16 Bf16::from_f32(float f) {
    uint32_t u = std::bit_cast<uint32_t>(f);
    if (((u >> 23) & 0xFFu) == 0xFFu && (u & 0x7FFFFFu) != 0) return from_bits(kCanonicalNan);
    return from_bits(static_cast<uint16_t>(u >> 16));
}

Bf16 Bf16::from_f32_rne(float f) {
    uint32_t u = std::bit_cast<uint32_t>(f);
    if (((u >> 23) & 0xFFu) == 0xFFu && (u & 0x7FFFFFu) != 0) return from_bits(kCanonicalNan);
    uint32_t lsb = (u >> 16) & 1u;
    u += 0x7FFFu + lsb;
    Bf16 r = from_bits(static_cast<uint16_t>(u >> 16));
    if (r.is_subnormal()) return from_bits(r.bits & kSignMask);
    return r;
}

float Bf16::to_f32() const {
    return std::bit_cast<float>(static_cast<uint32_t>(bits) << 16);
}

Bf16 add(Bf16 a, Bf16 b) {
    if (a.is_nan() || b.is_nan()) return Bf16::from_bits(Bf16::kCanonicalNan);
    if (a.is_inf() || b.is_inf()) {
        if (a.is_inf() && b.is_inf() && a.sign() != b.sign())
            return Bf16::from_bits(Bf16::kCanonicalNan);
        return a.is_inf() ? a : b;
    }
    Unpacked ua = unpack_finite(a);
    Unpacked ub = unpack_finite(b);
    if (ua.zero && ub.zero)
        return Bf16::from_bits((ua.sign && ub.sign) ? kSignMask : 0);
    if (ua.zero) return round_and_pack(ub.sign, ub.exp, ub.mant);
    if (ub.zero) return round_and_pack(ua.sign, ua.exp, ua.mant);

    if (ua.exp < ub.exp || (ua.exp == ub.exp && ua.mant < ub.mant)) std::swap(ua, ub);
    int d = ua.exp - ub.exp;
    if (d > 40) d = 40; // smaller operand is pure sticky beyond this
    uint64_t big = static_cast<uint64_t>(ua.mant) << d;
    uint64_t small = ub.mant;
    if (ua.sign == ub.sign) {
        return round_and_pack(ua.sign, ub.exp + (ua.exp - ub.exp - d), big + small);
    }
    if (big == small) return Bf16::from_bits(0); // exact cancellation -> +0
    return round_and_pack(ua.sign, ub.exp + (ua.exp - ub.exp - d), big - small);
}

Bf16 sub(Bf16 a, Bf16 b) { return add(a, b.negated()); }

Bf16 mul(Bf16 a, Bf16 b) {
    if (a.is_nan() || b.is_nan()) return Bf16::from_bits(Bf16::kCanonicalNan);
    bool sign = a.sign() != b.sign();
    if (a.is_inf() || b.is_inf()) {
        if (a.is_zero() || b.is_zero()) return Bf16::from_bits(Bf16::kCanonicalNan);
        return Bf16::from_bits(sign ? Bf16::kNegInf : Bf16::kPosInf);
    }
    Unpacked ua = unpack_finite(a);
    Unpacked ub = unpack_finite(b);
    if (ua.zero || ub.zero) return Bf16::from_bits(sign ? kSignMask : 0);
    uint64_t p = static_cast<uint64_t>(ua.mant) * ub.mant;
    return round_and_pack(sign, ua.exp + ub.exp, p);
}

namespace {

// Quadratic interpolants of 1/sqrt(m) on [1,2) and [2,4), refined by one
// Newton step. Approximation error stays below 1.5e-3 relative, well
// inside the 2^-7 contract once output rounding is included.
double rsqrt_seed(double m) {
    if (m < 2.0) {
        const double x0 = 1.0, x1 = 1.5, x2 = 2.0;
        const double y0 = 1.0, y1 = 0.81649658092772603, y2 = 0.70710678118654752;
        double l0 = (m - x1) * (m - x2) / ((x0 - x1) * (x0 - x2));
        double l1 = (m - x0) * (m - x2) / ((x1 - x0) * (x1 - x2));
        double l2 = (m - x0) * (m - x1) / ((x2 - x0) * (x2 - x1));
        return y0 * l0 + y1 * l1 + y2 * l2;
    }
    const double x0 = 2.0, x1 = 3.0, x2 = 4.0;
    const double y0 = 0.70710678118654752, y1 = 0.57735026918962576, y2 = 0.5;
    double l0 = (m - x1) * (m - x2) / ((x0 - x1) * (x0 - x2));
    double l1 = (m - x0) * (m - x2) / ((x1 - x0) * (x1 - x2));
    double l2 = (m - x0) * (m - x1) / ((x2 - x0) * (x2 - x1));
    return y0 * l0 + y1 * l1 + y2 * l2;
}

} // namespace

Bf16 inv_sqrt(Bf16 x, bool* domain_error) {
    float xf = x.to_f32();
    if (x.is_nan() || x.is_inf() || xf <= 0.0f) {
        if (domain_error) *domain_error = true;
        return Bf16::from_bits(Bf16::kCanonicalNan);
    }
    int e;
    double m = std::frexp(static_cast<double>(xf), &e); // x = m * 2^e, m in [0.5, 1)
    double mm;
    int ee;
    if (((e - 1) & 1) == 0) {
        mm = 2.0 * m; // [1, 2)
        ee = e - 1;
    } else {
        mm = 4.0 * m; // [2, 4)
        ee = e - 2;
    }
    double y = rsqrt_seed(mm);
    y = y * (1.5 - 0.5 * mm * y * y);
    double r = std::ldexp(y, -ee / 2);
    return Bf16::from_f64_rne(r);
}

CBf16 add(CBf16 a, CBf16 b) { return {add(a.re, b.re), add(a.im, b.im)}; }

CBf16 sub(CBf16 a, CBf16 b) { return {sub(a.re, b.re), sub(a.im, b.im)}; }

CBf16 mul(CBf16 a, CBf16 b) {
    Bf16 rr = mul(a.re, b.re);
    Bf16 ii = mul(a.im, b.im);
    Bf16 ri = mul(a.re, b.im);
    Bf16 ir = mul(a.im, b.re);
    return {sub(rr, ii), add(ri, ir)};
}

CBf16 mac(CBf16 acc, CBf16 a, CBf16 b) { return add(acc, mul(a, b)); }

} // namespace asip
