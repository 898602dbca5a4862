#pragma once

#include <cstdint>

namespace asip {

// Brain-float scalar: 1 sign, 8 exponent, 7 fraction bits.
// Arithmetic is a bit-exact integer softfloat with round-to-nearest-even
// and flush-to-zero on subnormal results. Down-conversion from binary32
// truncates; up-conversion appends 16 zero bits. NaNs collapse to one
// canonical pattern so results are reproducible bit for bit.
struct Bf16 {
    uint16_t bits = 0;

    static constexpr uint16_t kCanonicalNan = 0x7FC0;
    static constexpr uint16_t kPosInf = 0x7F80;
    static constexpr uint16_t kNegInf = 0xFF80;

    static constexpr Bf16 from_bits(uint16_t b) { return Bf16{b}; }

    // Truncating down-conversion (drops the low 16 bits of the binary32
    // pattern); any NaN input maps to the canonical NaN.
    static Bf16 from_f32(float f);

    // Round-to-nearest-even down-conversion with subnormal flush. Used by
    // value producers (constant generation, file loaders, inv_sqrt), not
    // by the conversion instruction.
    static Bf16 from_f32_rne(float f);

    static Bf16 from_f64_rne(double d) { return from_f32_rne(static_cast<float>(d)); }

    float to_f32() const;
    double to_f64() const { return static_cast<double>(to_f32()); }

    bool sign() const { return (bits & 0x8000u) != 0; }
    uint16_t exponent_field() const { return (bits >> 7) & 0xFFu; }
    uint16_t fraction() const { return bits & 0x7Fu; }

    bool is_nan() const { return exponent_field() == 0xFF && fraction() != 0; }
    bool is_inf() const { return exponent_field() == 0xFF && fraction() == 0; }
    bool is_zero() const { return (bits & 0x7FFFu) == 0; }
    bool is_subnormal() const { return exponent_field() == 0 && fraction() != 0; }
    bool is_finite() const { return exponent_field() != 0xFF; }

    Bf16 negated() const { return Bf16{static_cast<uint16_t>(bits ^ 0x8000u)}; }

    friend bool operator==(Bf16 a, Bf16 b) { return a.bits == b.bits; }
};

// Softfloat arithmetic. Results are identical to "convert to binary32,
// operate, round to nearest even, flush subnormals to signed zero".
Bf16 add(Bf16 a, Bf16 b);
Bf16 sub(Bf16 a, Bf16 b);
Bf16 mul(Bf16 a, Bf16 b);

// Approximate reciprocal square root, relative error <= 2^-7 against a
// binary64 reference over all positive normal inputs; exact on powers of
// four with representable results. x <= 0, NaN or +inf yields the
// canonical NaN and sets *domain_error when provided.
Bf16 inv_sqrt(Bf16 x, bool* domain_error = nullptr);

struct CBf16 {
    Bf16 re;
    Bf16 im;

    static CBf16 from_f32(float r, float i) { return {Bf16::from_f32(r), Bf16::from_f32(i)}; }
    static CBf16 from_f64_rne(double r, double i) {
        return {Bf16::from_f64_rne(r), Bf16::from_f64_rne(i)};
    }
    static constexpr CBf16 zero() { return {Bf16{0}, Bf16{0}}; }
    static CBf16 one() { return {Bf16{0x3F80}, Bf16{0}}; }

    bool is_zero() const { return re.is_zero() && im.is_zero(); }

    friend bool operator==(CBf16 a, CBf16 b) { return a.re == b.re && a.im == b.im; }
};

inline CBf16 conj(CBf16 z) { return {z.re, z.im.negated()}; }

CBf16 add(CBf16 a, CBf16 b);
CBf16 sub(CBf16 a, CBf16 b);

// (a.re*b.re - a.im*b.im, a.re*b.im + a.im*b.re), every partial product
// and every sum rounded individually.
CBf16 mul(CBf16 a, CBf16 b);

// acc + a*b with the same per-step rounding as mul/add.
CBf16 mac(CBf16 acc, CBf16 a, CBf16 b);

// Packed register/wire form: re in the upper 16 bits, im in the lower.
inline uint32_t pack(CBf16 z) {
    return (static_cast<uint32_t>(z.re.bits) << 16) | z.im.bits;
}
inline CBf16 unpack(uint32_t w) {
    return {Bf16::from_bits(static_cast<uint16_t>(w >> 16)),
            Bf16::from_bits(static_cast<uint16_t>(w & 0xFFFFu))};
}

} // namespace asip
