#pragma once

#include <array>
#include <iosfwd>
#include <string>

#include "asipsim/isa.hpp"
#include "asipsim/systolic.hpp"
#include "asipsim/vector_memory.hpp"

namespace asip {

// Per-instruction cycle costs. Pure data so experiments can swap it; the
// defaults model a single-issue in-order 5-stage pipeline with full
// forwarding except a one-cycle load-use stall.
struct CostModel {
    uint32_t issue = 1;               // base cost of every instruction
    uint32_t load_use_stall = 1;      // consumer immediately after a load
    uint32_t branch_taken_penalty = 2;
    uint32_t vdot_extra = 1;          // tree reduction finishes in writeback
    uint32_t invsqrt_extra = 1;       // two-stage execution path
    uint32_t vector_mem_access = 1;   // per block touched by ldv/stv
    uint32_t systolic_issue = 1;      // sys.* configuration instructions
};

enum class RunStatus : uint8_t { halted = 0, timeout = 1, fault = 2 };

struct ExecutionReport {
    RunStatus status = RunStatus::halted;
    uint64_t cycles = 0;
    uint64_t instructions = 0;
    uint64_t mem_read_cycles = 0;  // parallel vector memory reads
    uint64_t mem_write_cycles = 0; // parallel vector memory writes
    uint64_t systolic_cycles = 0;  // core suspended while the array ran
    uint64_t systolic_jobs = 0;
    std::array<uint64_t, static_cast<size_t>(Opcode::count_)> op_counts{};
    std::string fault_message;
    int32_t fault_pc = -1;

    uint64_t memory_cycles() const { return mem_read_cycles + mem_write_cycles; }
};

// Architectural state plus the simulation loop. One instance is
// single-threaded; independent machines can run concurrently.
class Machine {
public:
    static constexpr size_t kScalarMemBytes = 2048;

    Machine(ParallelVectorMemory& vmem, SystolicUnit& systolic)
        : vmem_(vmem), systolic_(systolic) {
        reset();
    }

    void reset();
    void load_program(Program p);
    const Program& program() const { return program_; }

    // Executes one instruction. Returns false once halted or faulted.
    bool step();

    // Runs until halt, fault, or the cycle budget is exhausted. The
    // optional trace stream gets one line per retired instruction.
    ExecutionReport run(uint64_t max_cycles, std::ostream* trace = nullptr);

    // register files
    std::array<uint32_t, kNumX> x{};
    std::array<VectorWord, kNumV> v{};
    std::array<uint32_t, kNumVa> va{};
    std::array<CBf16, kNumVs> vs{};
    int32_t pc = 0;
    uint64_t cycles = 0;
    bool halted = false;
    bool domain_error = false;       // sticky inv.sqrt domain flag
    bool halt_on_domain_error = true;

    CostModel cost;

    ParallelVectorMemory& vector_memory() { return vmem_; }
    SystolicUnit& systolic() { return systolic_; }

    std::array<uint8_t, kScalarMemBytes> scalar_mem{};

private:
    struct Fault : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    void write_x(uint8_t r, uint32_t val);
    VectorWord operand1(const Instruction& ins) const;
    VectorWord operand2(const Instruction& ins) const;
    unsigned element_index(const Instruction& ins) const;
    void exec(const Instruction& ins);
    bool consumes_loaded_reg(const Instruction& ins) const;

    ParallelVectorMemory& vmem_;
    SystolicUnit& systolic_;
    Program program_;

    ExecutionReport rep_{};
    // load-use tracking: destination of the previous instruction if it was a load
    enum class LoadKind : uint8_t { none, scalar, vector } last_load_ = LoadKind::none;
    uint8_t last_load_reg_ = 0;
    std::string written_; // trace fragment for the last step
    friend struct MachineTracer;
};

} // namespace asip
