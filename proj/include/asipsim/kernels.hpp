#pragma once

// Assembly program builders for the workload suite. Register conventions:
// x16..x31 hold lane indices 0..15 and vs7 holds 1+0j after the prologue;
// v15 is left at its reset value (all zeros) and used as an architectural
// zero vector; fragments otherwise use x1..x15 and v0..v14 freely.

#include <cstdint>
#include <string>

#include "asipsim/vector_memory.hpp"

namespace asip::kernels {

std::string prologue();

// Blocked vector-core GEMM: dst <- A*B with dst registered beforehand.
// Column-at-a-time schedule; per output column one chunk of B and sixteen
// columns of A stream through shuffled-column loads.
std::string vector_gemm(const MatrixHandle& a, const MatrixHandle& b, const MatrixHandle& dst,
                        const std::string& label_prefix = "g");

// Vector-core Gramian dst <- A*A^H for a 16-row A, rank-1 updates over
// two passes of eight accumulator columns.
std::string vector_gramian(const MatrixHandle& a, const MatrixHandle& dst,
                           const std::string& label_prefix = "gr");

struct CholeskyLayout {
    MatrixHandle w;   // 16x16 working matrix, factored in place (input G)
    MatrixHandle l;   // 16x16 output, must be zeroed
    VAddr invd;       // one word: per-column reciprocal diagonal
};

// In-place Crout factorization of a 16x16 hermitian positive-definite
// matrix; every column's pivot goes through vdot + inv.sqrt.
std::string cholesky16(const CholeskyLayout& lay);

// Substitution solves against the factor produced by cholesky16. rhs is a
// 16xN matrix solved in place, N a multiple of 16.
std::string forward_solve(const CholeskyLayout& lay, const MatrixHandle& rhs,
                          const std::string& label_prefix = "fs");
std::string backward_solve(const CholeskyLayout& lay, const MatrixHandle& rhs,
                           const std::string& label_prefix = "bs");

struct ZfLayout {
    MatrixHandle hh;     // H^H, 16 x M (gramian operand and solve RHS, becomes W_det)
    VAddr g;             // 16x16 gramian destination
    CholeskyLayout chol; // w = the gramian output region
    VAddr r0;            // first received batch (M x 16), batches contiguous
    VAddr y0;            // first detection output (16 x 16), contiguous
    uint32_t m_blocks;   // M / 16
    uint32_t batches;    // n_b*n_t / 16
};

// Full coherence-block program: Gramian on the systolic array, Cholesky,
// two substitution solves, then one systolic detection job per batch of
// sixteen received vectors.
std::string zf_program(const ZfLayout& lay);

struct Fft2dLayout {
    MatrixHandle wn;      // N x N DFT matrix
    MatrixHandle a;       // N x M input
    MatrixHandle wm_conj; // M x M conjugated DFT matrix
    VAddr t;              // N x M intermediate
    VAddr f;              // N x M result
};

// F = W_N * A * W_M^H as two systolic multiplications.
std::string fft2d_program(const Fft2dLayout& lay);

} // namespace asip::kernels
