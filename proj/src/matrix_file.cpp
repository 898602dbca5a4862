#include "asipsim/matrix_file.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>

namespace asip {

namespace {

void put_u32(std::ostream& out, uint32_t v) {
    std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                          static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    out.write(b.data(), 4);
}

uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_u16(std::ostream& out, uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

uint16_t get_u16(std::istream& in) {
    unsigned char b[2] = {0, 0};
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

} // namespace

void save_matrix(const ParallelVectorMemory& mem, const MatrixHandle& h, std::ostream& out) {
    out.write("PVMM", 4);
    put_u32(out, h.rows);
    put_u32(out, h.cols);
    put_u32(out, kMatrixKindCBf16);
    for (uint32_t r = 0; r < h.rows; ++r) {
        for (uint32_t c = 0; c < h.cols; ++c) {
            CBf16 v = mem.element(h, r, c);
            put_u16(out, v.re.bits);
            put_u16(out, v.im.bits);
        }
    }
    if (!out) throw MatrixFileError("short write while saving matrix");
}

void save_matrix_file(const ParallelVectorMemory& mem, const MatrixHandle& h,
                      const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw MatrixFileError("cannot open " + path + " for writing");
    save_matrix(mem, h, f);
}

MatrixHandle load_matrix(ParallelVectorMemory& mem, std::istream& in) {
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "PVMM")
        throw MatrixFileError("not a PVMM matrix stream");
    uint32_t rows = get_u32(in);
    uint32_t cols = get_u32(in);
    uint32_t kind = get_u32(in);
    if (!in) throw MatrixFileError("truncated PVMM header");
    if (kind != kMatrixKindCBf16)
        throw MatrixFileError("unsupported element kind " + std::to_string(kind));
    if (rows == 0 || cols == 0 || rows % 16 != 0 || cols % 16 != 0)
        throw MatrixFileError("matrix dimensions must be positive multiples of 16");

    MatrixHandle h = mem.register_matrix(rows, cols);
    for (uint32_t r = 0; r < rows; ++r) {
        for (uint32_t c = 0; c < cols; ++c) {
            uint16_t re = get_u16(in);
            uint16_t im = get_u16(in);
            if (!in) throw MatrixFileError("truncated PVMM payload");
            mem.set_element(h, r, c, {Bf16::from_bits(re), Bf16::from_bits(im)});
        }
    }
    return h;
}

MatrixHandle load_matrix_file(ParallelVectorMemory& mem, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw MatrixFileError("cannot open " + path);
    return load_matrix(mem, f);
}

} // namespace asip
