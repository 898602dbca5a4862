#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "asipsim/systolic.hpp"

using namespace asip;

namespace {

std::mt19937 g_rng(0x5751);

CBf16 random_value() {
    std::uniform_real_distribution<float> d(-2.0f, 2.0f);
    return CBf16::from_f32(d(g_rng), d(g_rng));
}

void randomize(ParallelVectorMemory& mem, const MatrixHandle& h) {
    for (uint32_t r = 0; r < h.rows; ++r)
        for (uint32_t c = 0; c < h.cols; ++c) mem.set_element(h, r, c, random_value());
}

// independent reference: plain row/column loops, ascending-k bf16 MAC chain
std::vector<CBf16> gemm_reference(const ParallelVectorMemory& mem, const MatrixHandle& a,
                                  const MatrixHandle& b, bool conj_b_of_a) {
    uint32_t m = a.rows, n = a.cols, p = conj_b_of_a ? a.rows : b.cols;
    std::vector<CBf16> out(static_cast<size_t>(m) * p);
    for (uint32_t i = 0; i < m; ++i) {
        for (uint32_t j = 0; j < p; ++j) {
            CBf16 acc = CBf16::zero();
            for (uint32_t k = 0; k < n; ++k) {
                CBf16 lhs = mem.element(a, i, k);
                CBf16 rhs = conj_b_of_a ? conj(mem.element(a, j, k)) : mem.element(b, k, j);
                acc = mac(acc, lhs, rhs);
            }
            out[static_cast<size_t>(i) * p + j] = acc;
        }
    }
    return out;
}

} // namespace

TEST_CASE("predict_cycles closed form") {
    CHECK(predict_cycles(1, 1, 1, SystolicMode::normal) == 64);
    CHECK(predict_cycles(1, 8, 1, SystolicMode::normal) == 288);
    CHECK(predict_cycles(1, 8, 1, SystolicMode::gramian) == 160);
    CHECK(predict_cycles(2, 2, 2, SystolicMode::normal) == 384);
    CHECK(predict_cycles(16, 16, 16, SystolicMode::normal) == 139264);
}

TEST_CASE("traffic matches the memory access profile exactly") {
    struct Shape {
        uint32_t m, n, p;
        uint64_t reads, writes;
    };
    // the six profiled shapes: five square sizes plus 16x128 * 128x16
    const Shape shapes[] = {
        {1, 1, 1, 32, 16},       {2, 2, 2, 256, 64},      {4, 4, 4, 2048, 256},
        {8, 8, 8, 16384, 1024},  {16, 16, 16, 131072, 4096}, {1, 8, 1, 256, 16},
    };
    for (const auto& s : shapes) {
        ParallelVectorMemory mem(16384);
        auto a = mem.register_matrix(s.m * 16, s.n * 16);
        auto b = mem.register_matrix(s.n * 16, s.p * 16);
        auto dst = mem.allocator_mark();
        SystolicJob job{a.base, b.base, dst, s.m, s.n, s.p, SystolicMode::normal};
        auto rep = systolic_execute(job, mem);
        CHECK(rep.read_cycles == s.reads);
        CHECK(rep.write_cycles == s.writes);
        CHECK(rep.total_cycles == predict_cycles(s.m, s.n, s.p, SystolicMode::normal) + 9);
        CHECK(rep.total_cycles == rep.read_cycles + rep.write_cycles + rep.overhead_cycles);
    }
}

TEST_CASE("16x16 job costs exactly 73 cycles") {
    ParallelVectorMemory mem;
    auto a = mem.register_matrix(16, 16);
    auto b = mem.register_matrix(16, 16);
    randomize(mem, a);
    randomize(mem, b);
    SystolicJob job{a.base, b.base, mem.allocator_mark(), 1, 1, 1, SystolicMode::normal};
    auto rep = systolic_execute(job, mem);
    CHECK(rep.total_cycles == 73);
    CHECK(rep.read_cycles == 32);
    CHECK(rep.write_cycles == 16);
}

TEST_CASE("identity times B reproduces B bit-exactly") {
    ParallelVectorMemory mem;
    auto a = mem.register_matrix(16, 16);
    auto b = mem.register_matrix(16, 16);
    for (uint32_t i = 0; i < 16; ++i) mem.set_element(a, i, i, CBf16::one());
    randomize(mem, b);
    SystolicJob job{a.base, b.base, mem.allocator_mark(), 1, 1, 1, SystolicMode::normal};
    systolic_execute(job, mem);
    auto dst = *mem.handle_at(job.dst_addr);
    for (uint32_t r = 0; r < 16; ++r)
        for (uint32_t c = 0; c < 16; ++c) CHECK(mem.element(dst, r, c) == mem.element(b, r, c));
}

TEST_CASE("numerical equivalence with the reference GEMM") {
    struct Dims {
        uint32_t m, n, p;
    };
    for (Dims d : {Dims{1, 1, 1}, Dims{2, 2, 2}, Dims{4, 4, 4}, Dims{1, 2, 1}, Dims{2, 1, 3}}) {
        ParallelVectorMemory mem(4096);
        auto a = mem.register_matrix(d.m * 16, d.n * 16);
        auto b = mem.register_matrix(d.n * 16, d.p * 16);
        randomize(mem, a);
        randomize(mem, b);
        SystolicJob job{a.base, b.base, mem.allocator_mark(), d.m, d.n, d.p, SystolicMode::normal};
        systolic_execute(job, mem);
        auto dst = *mem.handle_at(job.dst_addr);
        auto ref = gemm_reference(mem, a, b, false);
        for (uint32_t r = 0; r < dst.rows; ++r)
            for (uint32_t c = 0; c < dst.cols; ++c)
                REQUIRE(mem.element(dst, r, c) == ref[static_cast<size_t>(r) * dst.cols + c]);
    }
}

TEST_CASE("gramian mode") {
    ParallelVectorMemory mem(4096);
    auto a = mem.register_matrix(16, 128); // H^H-shaped operand
    randomize(mem, a);
    SystolicJob job{a.base, 0, mem.allocator_mark(), 1, 8, 1, SystolicMode::gramian};
    auto rep = systolic_execute(job, mem);
    CHECK(rep.read_cycles == 128);
    CHECK(rep.total_cycles == 169); // 160 + fill
    auto dst = *mem.handle_at(job.dst_addr);

    SUBCASE("values match the reference") {
        auto ref = gemm_reference(mem, a, a, true);
        for (uint32_t r = 0; r < 16; ++r)
            for (uint32_t c = 0; c < 16; ++c)
                REQUIRE(mem.element(dst, r, c) == ref[static_cast<size_t>(r) * 16 + c]);
    }
    SUBCASE("hermitian bit-exactly, real diagonal") {
        for (uint32_t r = 0; r < 16; ++r) {
            CHECK(mem.element(dst, r, r).im.bits == 0);
            for (uint32_t c = 0; c < 16; ++c)
                if (r != c) CHECK(mem.element(dst, r, c) == conj(mem.element(dst, c, r)));
        }
    }
}

TEST_CASE("memory overlap ratio at 256x256 exceeds 90 percent") {
    auto rep_reads = predict_cycles(16, 16, 16, SystolicMode::normal);
    uint64_t mem_cycles = 131072 + 4096;
    uint64_t total = rep_reads + 9;
    CHECK(static_cast<double>(mem_cycles) / static_cast<double>(total) >= 0.90);
}

TEST_CASE("gemm throughput at 800 MHz") {
    auto t16 = gemm_throughput(16, 800e6);
    CHECK(t16.mm_per_s == doctest::Approx(10.9e6).epsilon(0.10));
    CHECK(t16.gflops == doctest::Approx(86).epsilon(0.10));
    auto t256 = gemm_throughput(256, 800e6);
    CHECK(t256.mm_per_s == doctest::Approx(5.5e3).epsilon(0.10));
    CHECK(t256.gflops == doctest::Approx(184).epsilon(0.10));
    // a 16x16 job can never beat the pipeline-fill bound
    CHECK(t16.mm_per_s <= 800e6 / 73.0);
}

TEST_CASE("job rejections") {
    ParallelVectorMemory mem;
    auto a = mem.register_matrix(16, 32);
    auto b = mem.register_matrix(32, 16);
    randomize(mem, a);
    randomize(mem, b);

    SUBCASE("dimension mismatch") {
        SystolicJob job{a.base, b.base, mem.allocator_mark(), 1, 1, 1, SystolicMode::normal};
        CHECK_THROWS_AS(systolic_execute(job, mem), SystolicFault);
    }
    SUBCASE("unregistered operand") {
        SystolicJob job{500, b.base, 600, 1, 2, 1, SystolicMode::normal};
        CHECK_THROWS_AS(systolic_execute(job, mem), SystolicFault);
    }
    SUBCASE("destination overlapping a source") {
        SystolicJob job{a.base, b.base, b.base + 8, 1, 2, 1, SystolicMode::normal};
        CHECK_THROWS_AS(systolic_execute(job, mem), SystolicFault);
    }
    SUBCASE("gramian with non-square output") {
        SystolicJob job{a.base, 0, mem.allocator_mark(), 1, 2, 2, SystolicMode::gramian};
        CHECK_THROWS_AS(systolic_execute(job, mem), SystolicFault);
    }
}

TEST_CASE("systolic unit configuration protocol") {
    ParallelVectorMemory mem;
    auto a = mem.register_matrix(16, 16);
    auto b = mem.register_matrix(16, 16);
    randomize(mem, a);
    randomize(mem, b);

    SystolicUnit unit;
    CHECK_THROWS_AS(unit.multiply(mem, a.base, b.base), SystolicFault);
    unit.configure_size(1, 1, 1, SystolicMode::normal);
    CHECK_THROWS_AS(unit.multiply(mem, a.base, b.base), SystolicFault);
    unit.configure_dest(mem.allocator_mark());
    auto rep1 = unit.multiply(mem, a.base, b.base);
    CHECK(rep1.total_cycles == 73);

    // configuration is sticky; independent jobs cost the same again
    auto rep2 = unit.multiply(mem, a.base, b.base);
    CHECK(rep2.total_cycles == rep1.total_cycles);
    CHECK(unit.jobs_run() == 2);
}

TEST_CASE("trace row format") {
    SystolicJob job{0, 0, 0, 1, 8, 1, SystolicMode::gramian};
    SystolicReport rep{128, 16, 25, 169};
    CHECK(systolic_trace_row(job, rep) == "1,8,1,gramian,128,16,25,169");
}
