#pragma once

// PVMM matrix container: 16-byte header (magic "PVMM", rows, cols,
// element kind as little-endian u32) followed by row-major little-endian
// element payload. Kind 1 = complex bf16 pairs (re, im) of u16 bits.

#include <iosfwd>
#include <string>

#include "asipsim/vector_memory.hpp"

namespace asip {

inline constexpr uint32_t kMatrixKindCBf16 = 1;

struct MatrixFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Writes the matrix referenced by `h` in row-major order.
void save_matrix(const ParallelVectorMemory& mem, const MatrixHandle& h, std::ostream& out);
void save_matrix_file(const ParallelVectorMemory& mem, const MatrixHandle& h,
                      const std::string& path);

// Reads a PVMM stream, registers a matrix and converts it into the
// block-wise column-major layout.
MatrixHandle load_matrix(ParallelVectorMemory& mem, std::istream& in);
MatrixHandle load_matrix_file(ParallelVectorMemory& mem, const std::string& path);

} // namespace asip
