#pragma once

#include <cstdint>
#include <string>

#include "asipsim/vector_memory.hpp"

namespace asip {

enum class SystolicMode : uint8_t { normal = 0, gramian = 1 };

// A configured GEMM/Gramian task over the parallel vector memory. Block
// counts are matrix dimensions divided by 16. In gramian mode the second
// operand is the conjugate transpose of the first and b_addr is ignored.
struct SystolicJob {
    VAddr a_addr = 0;
    VAddr b_addr = 0;
    VAddr dst_addr = 0;
    uint32_t m_blocks = 0;
    uint32_t n_blocks = 0;
    uint32_t p_blocks = 0;
    SystolicMode mode = SystolicMode::normal;
};

struct SystolicReport {
    uint64_t read_cycles = 0;
    uint64_t write_cycles = 0;
    uint64_t overhead_cycles = 0;
    uint64_t total_cycles = 0;
};

struct SystolicFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed-form cycle count per the block schedule: each of the m*p output
// blocks costs 2*16n reads + 16 writes + 16 overhead; gramian mode halves
// the reads because the second operand streams from the same vectors.
// Excludes the per-job pipeline fill.
uint64_t predict_cycles(uint32_t m_blocks, uint32_t n_blocks, uint32_t p_blocks, SystolicMode mode);

// Cycles the pipeline needs to warm up before the block schedule streams.
inline constexpr uint64_t kPipelineFillCycles = 9;

// Runs the job against memory: dst <- A*B (or A*A^H), every output element
// accumulated over ascending k with per-step bf16 rounding. Returns the
// cycle/traffic breakdown. Dimension mismatches and source/destination
// overlap reject the job.
SystolicReport systolic_execute(const SystolicJob& job, ParallelVectorMemory& mem,
                                bool f32_accumulate = false);

struct GemmThroughput {
    double mm_per_s = 0.0;
    double gflops = 0.0;
};

// Square complex GEMM rate at a given clock; dim must be a positive
// multiple of 16. Flop accounting matches the reference tables: one
// multiply plus one add per complex MAC.
GemmThroughput gemm_throughput(uint32_t dim, double clock_hz);

// One CSV row per job: m,n,p,mode,reads,writes,overhead,total.
std::string systolic_trace_row(const SystolicJob& job, const SystolicReport& rep);

// Instruction-facing state: sys.sz and sys.des must both run before a
// sys.mul is accepted; the configuration stays in place afterwards so
// back-to-back jobs reuse it.
class SystolicUnit {
public:
    void configure_size(uint32_t m_blocks, uint32_t n_blocks, uint32_t p_blocks, SystolicMode mode);
    void configure_dest(VAddr dst);

    // Throws SystolicFault when the configuration is incomplete.
    SystolicReport multiply(ParallelVectorMemory& mem, VAddr a_addr, VAddr b_addr);

    bool size_configured() const { return size_set_; }
    bool dest_configured() const { return dest_set_; }
    const SystolicReport& last_report() const { return last_; }
    uint64_t jobs_run() const { return jobs_; }

    bool f32_accumulate = false; // precision experiment knob, off by default

private:
    bool size_set_ = false;
    bool dest_set_ = false;
    uint32_t m_ = 0, n_ = 0, p_ = 0;
    SystolicMode mode_ = SystolicMode::normal;
    VAddr dst_ = 0;
    SystolicReport last_{};
    uint64_t jobs_ = 0;
};

} // namespace asip
