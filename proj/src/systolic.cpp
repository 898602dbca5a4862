#include "asipsim/systolic.hpp"

#include <complex>
#include <sstream>

namespace asip {

uint64_t predict_cycles(uint32_t m_blocks, uint32_t n_blocks, uint32_t p_blocks,
                        SystolicMode mode) {
    uint64_t per_block = (mode == SystolicMode::gramian)
                             ? 16ull * n_blocks + 32
                             : 32ull * n_blocks + 32;
    return static_cast<uint64_t>(m_blocks) * p_blocks * per_block;
}

namespace {

MatrixHandle operand_handle(ParallelVectorMemory& mem, VAddr addr, uint32_t rows, uint32_t cols,
                            const char* which) {
    auto h = mem.handle_at(addr);
    if (!h)
        throw SystolicFault(std::string("systolic ") + which + " operand at " +
                            std::to_string(addr) + " is not a registered matrix");
    if (h->rows != rows || h->cols != cols)
        throw SystolicFault(std::string("systolic ") + which + " operand is " +
                            std::to_string(h->rows) + "x" + std::to_string(h->cols) +
                            ", job expects " + std::to_string(rows) + "x" + std::to_string(cols));
    return *h;
}

bool ranges_overlap(VAddr a0, VAddr a1, VAddr b0, VAddr b1) { return a0 < b1 && b0 < a1; }

} // namespace

SystolicReport systolic_execute(const SystolicJob& job, ParallelVectorMemory& mem,
                                bool f32_accumulate) {
    if (job.m_blocks == 0 || job.n_blocks == 0 || job.p_blocks == 0)
        throw SystolicFault("systolic job has zero block count");
    bool gram = job.mode == SystolicMode::gramian;
    if (gram && job.p_blocks != job.m_blocks)
        throw SystolicFault("gramian output is square: p_blocks must equal m_blocks");

    uint32_t m = job.m_blocks * 16, n = job.n_blocks * 16, p = job.p_blocks * 16;
    MatrixHandle a = operand_handle(mem, job.a_addr, m, n, "A");
    MatrixHandle b = gram ? a : operand_handle(mem, job.b_addr, n, p, "B");

    MatrixHandle dst;
    if (auto existing = mem.handle_at(job.dst_addr)) {
        if (existing->rows != m || existing->cols != p)
            throw SystolicFault("systolic destination dimensions do not match the job");
        dst = *existing;
    } else {
        dst = mem.register_matrix_at(job.dst_addr, m, p);
    }
    if (ranges_overlap(dst.base, dst.end(), a.base, a.end()) ||
        (!gram && ranges_overlap(dst.base, dst.end(), b.base, b.end())))
        throw SystolicFault("systolic destination overlaps a source operand");

    auto accumulate = [&](uint32_t i, uint32_t j, bool conj_b) {
        if (f32_accumulate) {
            std::complex<float> acc{0.0f, 0.0f};
            for (uint32_t k = 0; k < n; ++k) {
                CBf16 av = mem.element(a, i, k);
                CBf16 bv = gram ? mem.element(a, j, k) : mem.element(b, k, j);
                std::complex<float> af{av.re.to_f32(), av.im.to_f32()};
                std::complex<float> bf{bv.re.to_f32(), conj_b ? -bv.im.to_f32() : bv.im.to_f32()};
                acc += af * bf;
            }
            return CBf16{Bf16::from_f32_rne(acc.real()), Bf16::from_f32_rne(acc.imag())};
        }
        CBf16 acc = CBf16::zero();
        for (uint32_t k = 0; k < n; ++k) {
            CBf16 av = mem.element(a, i, k);
            CBf16 bv = gram ? conj(mem.element(a, j, k)) : mem.element(b, k, j);
            acc = mac(acc, av, bv);
        }
        return acc;
    };

    if (gram) {
        // lower triangle computed, upper mirrored: hermitian by construction
        for (uint32_t i = 0; i < m; ++i) {
            for (uint32_t j = 0; j <= i; ++j) {
                CBf16 c = accumulate(i, j, true);
                mem.set_element(dst, i, j, c);
                if (i != j) mem.set_element(dst, j, i, conj(c));
            }
        }
    } else {
        for (uint32_t i = 0; i < m; ++i)
            for (uint32_t j = 0; j < p; ++j) mem.set_element(dst, i, j, accumulate(i, j, false));
    }

    SystolicReport rep;
    uint64_t blocks = static_cast<uint64_t>(job.m_blocks) * job.p_blocks;
    rep.read_cycles = blocks * (gram ? 16ull * job.n_blocks : 32ull * job.n_blocks);
    rep.write_cycles = blocks * 16;
    rep.overhead_cycles = blocks * 16 + kPipelineFillCycles;
    rep.total_cycles = rep.read_cycles + rep.write_cycles + rep.overhead_cycles;
    return rep;
}

GemmThroughput gemm_throughput(uint32_t dim, double clock_hz) {
    if (dim == 0 || dim % 16 != 0) throw SystolicFault("throughput dim must be a multiple of 16");
    if (clock_hz <= 0) throw SystolicFault("clock must be positive");
    uint32_t blocks = dim / 16;
    uint64_t cycles = predict_cycles(blocks, blocks, blocks, SystolicMode::normal) +
                      kPipelineFillCycles;
    GemmThroughput t;
    t.mm_per_s = clock_hz / static_cast<double>(cycles);
    double macs = static_cast<double>(dim) * dim * dim;
    t.gflops = t.mm_per_s * macs * 2.0 / 1e9;
    return t;
}

std::string systolic_trace_row(const SystolicJob& job, const SystolicReport& rep) {
    std::ostringstream os;
    os << job.m_blocks << ',' << job.n_blocks << ',' << job.p_blocks << ','
       << (job.mode == SystolicMode::gramian ? "gramian" : "normal") << ',' << rep.read_cycles
       << ',' << rep.write_cycles << ',' << rep.overhead_cycles << ',' << rep.total_cycles;
    return os.str();
}

void SystolicUnit::configure_size(uint32_t m_blocks, uint32_t n_blocks, uint32_t p_blocks,
                                  SystolicMode mode) {
    if (m_blocks == 0 || n_blocks == 0 || p_blocks == 0)
        throw SystolicFault("sys.sz block counts must be positive");
    m_ = m_blocks;
    n_ = n_blocks;
    p_ = p_blocks;
    mode_ = mode;
    size_set_ = true;
}

void SystolicUnit::configure_dest(VAddr dst) {
    dst_ = dst;
    dest_set_ = true;
}

SystolicReport SystolicUnit::multiply(ParallelVectorMemory& mem, VAddr a_addr, VAddr b_addr) {
    if (!size_set_ || !dest_set_)
        throw SystolicFault(std::string("sys.mul before ") +
                            (!size_set_ ? "sys.sz" : "sys.des") + " configuration");
    SystolicJob job{a_addr, b_addr, dst_, m_, n_, p_, mode_};
    last_ = systolic_execute(job, mem, f32_accumulate);
    ++jobs_;
    return last_;
}

} // namespace asip
