#include "asipsim/kernels.hpp"

#include <sstream>

namespace asip::kernels {

namespace {

struct Emitter {
    std::ostringstream out;
    void line(const std::string& s) { out << "    " << s << "\n"; }
    void label(const std::string& s) { out << s << ":\n"; }
    void li(const std::string& reg, int64_t value) {
        out << "    li " << reg << ", " << value << "\n";
    }
    std::string str() const { return out.str(); }
};

std::string lane_reg(unsigned lane) { return "x" + std::to_string(16 + lane); }

} // namespace

std::string prologue() {
    Emitter e;
    for (unsigned i = 0; i < 16; ++i) e.li(lane_reg(i), i);
    e.li("x1", 0x3F80); // 1.0 in bf16
    e.line("slli x1, x1, 16");
    e.line("mvxs vs7, x1"); // vs7 = 1 + 0j
    return e.str();
}

std::string vector_gemm(const MatrixHandle& a, const MatrixHandle& b, const MatrixHandle& dst,
                        const std::string& lp) {
    const uint32_t m = a.row_blocks(), n = a.col_blocks(), p = b.col_blocks();
    Emitter e;
    // x8 = A block-row base, x9 = B column base for J, x10 = C column base
    e.li("x9", b.base);
    e.li("x10", dst.base);
    e.li("x12", 16);
    e.li("x13", m);
    e.li("x14", p);
    e.li("x1", 0); // J
    e.label(lp + "_J");
    e.li("x8", a.base);
    e.li("x2", 0); // I
    e.label(lp + "_I");
    e.line("mvva va2, x10"); // C column stream of block (I, J)
    e.li("x6", 0);           // j
    e.label(lp + "_j");
    e.line("addv v0, vzero, v15"); // acc <- +0
    e.line("add x5, x9, x6");      // B chunk address, block (0, J) column j
    e.line("mvva va0, x8");        // A stream at block (I, 0)
    if (m > 1) e.line("add x4, x8, x0");
    for (uint32_t kb = 0; kb < n; ++kb) {
        e.line("mvva va1, x5");
        e.line("addi x5, x5, 16");
        e.line("ldv v1, (va1) [mode1]"); // B rows 16kb..16kb+15 of column J*16+j
        // 16 MACs over the A block, loads one ahead of use
        e.line("ldv v2, (va0++) [mode1]");
        for (unsigned kk = 0; kk < 16; ++kk) {
            const char* cur = (kk % 2 == 0) ? "v2" : "v3";
            const char* next = (kk % 2 == 0) ? "v3" : "v2";
            if (kk < 15) e.line(std::string("ldv ") + next + ", (va0++) [mode1]");
            e.line(std::string("vmac v0, ") + cur + ", v1[" + lane_reg(kk) + "]");
        }
        if (m > 1 && kb + 1 < n) {
            e.line("addi x4, x4, " + std::to_string(16 * m));
            e.line("mvva va0, x4");
        }
    }
    e.line("stv v0, (va2++) [mode1]");
    e.line("addi x6, x6, 1");
    e.line("blt x6, x12, " + lp + "_j");
    e.line("addi x10, x10, 16");
    e.line("addi x8, x8, 16");
    e.line("addi x2, x2, 1");
    e.line("blt x2, x13, " + lp + "_I");
    e.line("addi x9, x9, " + std::to_string(16 * n));
    e.line("addi x1, x1, 1");
    e.line("blt x1, x14, " + lp + "_J");
    return e.str();
}

std::string vector_gramian(const MatrixHandle& a, const MatrixHandle& dst, const std::string& lp) {
    const uint32_t n = a.col_blocks();
    Emitter e;
    // two passes of eight accumulator columns (v2..v9), rank-1 updates
    for (unsigned pass = 0; pass < 2; ++pass) {
        for (unsigned j = 0; j < 8; ++j)
            e.line("addv v" + std::to_string(2 + j) + ", vzero, v15");
        e.li("x1", a.base);
        e.line("mvva va0, x1");
        e.li("x2", 0);
        e.label(lp + "_p" + std::to_string(pass));
        // one 16-column block of A per iteration, loads one ahead
        e.line("ldv v0, (va0++) [mode1]");
        for (unsigned k = 0; k < 16; ++k) {
            const char* cur = (k % 2 == 0) ? "v0" : "v1";
            const char* next = (k % 2 == 0) ? "v1" : "v0";
            if (k < 15) e.line(std::string("ldv ") + next + ", (va0++) [mode1]");
            for (unsigned j = 0; j < 8; ++j) {
                unsigned col = pass * 8 + j;
                e.line("vmac v" + std::to_string(2 + j) + ", " + cur + ", conj(" + cur + "[" +
                       lane_reg(col) + "])");
            }
        }
        e.line("addi x2, x2, 1");
        e.li("x3", n);
        e.line("blt x2, x3, " + lp + "_p" + std::to_string(pass));
        e.li("x4", dst.base + pass * 8);
        e.line("mvva va2, x4");
        for (unsigned j = 0; j < 8; ++j)
            e.line("stv v" + std::to_string(2 + j) + ", (va2++) [mode1]");
    }
    return e.str();
}

std::string cholesky16(const CholeskyLayout& lay) {
    Emitter e;
    // v13 accumulates a prefix-of-ones mask vector, v14 the reciprocal
    // diagonal; both start as zero words
    e.line("addv v13, vzero, v15");
    e.line("addv v14, vzero, v15");
    for (unsigned j = 0; j < 16; ++j) {
        const std::string xj = lane_reg(j);
        // w_j = -(row j of W) masked to lanes 0..j-1, then +1 at lane j
        e.li("x1", lay.w.base + j);
        e.line("mvva va0, x1");
        e.line("ldv v0, (va0) [mode0]");
        e.line("subv v1, vzero, v0");
        e.line("idxvm v13, vs7, " + xj); // prefix mask grows to lane j
        e.line("mulv v1, v1, v13");
        e.line("idxvm v1, vs7, " + xj); // lane j := 1
        // augmented dots c_i = W[i][j] - sum_{k<j} L[i][k] conj(L[j][k])
        e.li("x2", lay.w.base + j);
        e.line("mvva va1, x2");
        e.line("ldv v3, (va1++) [mode0]"); // row j
        if (j < 15) e.line("ldv v4, (va1++) [mode0]");
        e.line("vdot vs0, v3, conj(v1)"); // c_j = pivot d
        e.line("inv.sqrt vs1, vs0");
        e.line("idxvm v14, vs1, " + xj);
        e.line("idxvm v2, vs0, " + xj);
        for (unsigned i = j + 1; i < 16; ++i) {
            const char* cur = ((i - j) % 2 == 1) ? "v4" : "v3";
            const char* next = ((i - j) % 2 == 1) ? "v3" : "v4";
            if (i < 15) e.line(std::string("ldv ") + next + ", (va1++) [mode0]");
            e.line(std::string("vdot vs0, ") + cur + ", conj(v1)");
            e.line("idxvm v2, vs0, " + lane_reg(i));
        }
        e.line("mulv v2, v2, vs1"); // scale column by 1/sqrt(d)
        int32_t mask = static_cast<int32_t>(static_cast<int16_t>((0xFFFFu << j) & 0xFFFFu));
        e.li("x3", mask);
        e.line("mvxs vs2, x3");
        e.li("x4", lay.l.base + j);
        e.line("mvva va2, x4");
        e.line("stv v2, (va2) [mode1] [mask vs2]");
        e.li("x5", lay.w.base + j);
        e.line("mvva va3, x5");
        e.line("stv v2, (va3) [mode1] [mask vs2]");
    }
    e.li("x6", lay.invd);
    e.line("mvva va4, x6");
    e.line("stv v14, (va4)");
    return e.str();
}

namespace {

// Substitution over one 16-wide block of right-hand sides per iteration.
// Twelve result rows stay register-resident, the rest spill through memory.
std::string solve_kernel(const CholeskyLayout& lay, const MatrixHandle& rhs, bool forward,
                         const std::string& lp) {
    Emitter e;
    const uint32_t blocks = rhs.col_blocks();
    e.li("x1", lay.invd);
    e.line("mvva va0, x1");
    e.line("ldv v14, (va0)");
    e.li("x2", 0);            // block-column counter
    e.li("x3", rhs.base);     // rhs block base
    e.label(lp + "_bc");
    // row index order and the register a row lives in while resident
    auto row_of = [&](unsigned step) { return forward ? step : 15 - step; };
    auto reg_of = [&](unsigned step) { return step < 12 ? static_cast<int>(step) : 12; };
    for (unsigned step = 0; step < 16; ++step) {
        unsigned j = row_of(step);
        std::string acc = "v" + std::to_string(reg_of(step));
        // L row j (forward) or column j (backward), negated
        e.li("x4", lay.l.base + j);
        e.line("mvva va1, x4");
        e.line(forward ? "ldv v15, (va1) [mode0]" : "ldv v15, (va1) [mode1]");
        e.line("subv v15, vzero, v15");
        // rhs row j
        e.line("add x5, x3, " + lane_reg(j));
        e.line("mvva va2, x5");
        e.line("ldv " + acc + ", (va2)");
        for (unsigned prev = 0; prev < step; ++prev) {
            unsigned k = row_of(prev);
            std::string term = forward ? "v15[" + lane_reg(k) + "]"
                                       : "conj(v15[" + lane_reg(k) + "])";
            if (prev < 12) {
                e.line("vmac " + acc + ", v" + std::to_string(prev) + ", " + term);
            } else {
                // spilled row: reload from the solved block
                e.line("add x6, x3, " + lane_reg(k));
                e.line("mvva va3, x6");
                e.line("ldv v13, (va3)");
                e.line("vmac " + acc + ", v13, " + term);
            }
        }
        e.line("mulv " + acc + ", " + acc + ", v14[" + lane_reg(j) + "]");
        e.line("stv " + acc + ", (va2)");
    }
    e.line("addi x3, x3, 16");
    e.line("addi x2, x2, 1");
    e.li("x7", blocks);
    e.line("blt x2, x7, " + lp + "_bc");
    return e.str();
}

} // namespace

std::string forward_solve(const CholeskyLayout& lay, const MatrixHandle& rhs,
                          const std::string& lp) {
    return solve_kernel(lay, rhs, true, lp);
}

std::string backward_solve(const CholeskyLayout& lay, const MatrixHandle& rhs,
                           const std::string& lp) {
    return solve_kernel(lay, rhs, false, lp);
}

std::string zf_program(const ZfLayout& lay) {
    std::ostringstream out;
    out << prologue();
    Emitter e;
    // Gramian G = (H^H)(H^H)^H on the systolic array
    e.li("x1", lay.hh.base);
    e.li("x2", lay.g);
    e.line("sys.sz 1, " + std::to_string(lay.m_blocks) + ", 1, 1");
    e.line("sys.des (x2)");
    e.line("sys.mul (x1), (x1)");
    out << e.str();
    out << cholesky16(lay.chol);
    out << forward_solve(lay.chol, lay.hh, "fs");
    out << backward_solve(lay.chol, lay.hh, "bs");
    // batched detection: Yhat_b = W * R_b
    Emitter d;
    d.li("x1", 0);
    d.li("x2", lay.r0);
    d.li("x3", lay.y0);
    d.li("x5", lay.hh.base);
    d.li("x8", lay.batches);
    d.line("sys.sz 1, " + std::to_string(lay.m_blocks) + ", 1, 0");
    d.label("det");
    d.line("sys.des (x3)");
    d.line("sys.mul (x5), (x2)");
    d.line("addi x2, x2, " + std::to_string(lay.m_blocks * 16));
    d.line("addi x3, x3, 16");
    d.line("addi x1, x1, 1");
    d.line("blt x1, x8, det");
    d.line("halt");
    out << d.str();
    return out.str();
}

std::string fft2d_program(const Fft2dLayout& lay) {
    const uint32_t nb = lay.wn.row_blocks();   // N/16
    const uint32_t mb = lay.wm_conj.row_blocks(); // M/16
    Emitter e;
    e.li("x1", lay.wn.base);
    e.li("x2", lay.a.base);
    e.li("x3", lay.t);
    e.line("sys.sz " + std::to_string(nb) + ", " + std::to_string(nb) + ", " +
           std::to_string(mb) + ", 0");
    e.line("sys.des (x3)");
    e.line("sys.mul (x1), (x2)");
    e.li("x4", lay.wm_conj.base);
    e.li("x5", lay.f);
    e.line("sys.sz " + std::to_string(nb) + ", " + std::to_string(mb) + ", " +
           std::to_string(mb) + ", 0");
    e.line("sys.des (x5)");
    e.line("sys.mul (x3), (x4)");
    e.line("halt");
    return e.str();
}

} // namespace asip::kernels
