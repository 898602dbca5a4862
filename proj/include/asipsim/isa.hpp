#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "asipsim/vector_memory.hpp"

namespace asip {

// Register files: 32 scalar (x), 16 vector (v), 8 vector-address (va),
// 8 vector-scalar (vs). x0 reads as zero and ignores writes.
inline constexpr unsigned kNumX = 32;
inline constexpr unsigned kNumV = 16;
inline constexpr unsigned kNumVa = 8;
inline constexpr unsigned kNumVs = 8;

enum class Opcode : uint8_t {
    trap = 0,
    // scalar core
    add, addi, sub, and_, or_, slli,
    lw, sw,
    beq, bne, blt,
    jal, jalr,
    li,
    halt,
    mvxs, // vs <- x (packed re|im bits)
    mvsx, // x <- vs (packed)
    mvva, // va <- x
    // vector core
    ldv, stv,
    addv, subv, mulv,
    vmac, vdot,
    inv_sqrt,
    idxv, idxvm,
    // systolic control
    sys_sz, sys_des, sys_mul,
    count_
};

// Decode-stage transform of the first vector operand.
enum class Op1Form : uint8_t { vec = 0, conj = 1, zero = 2 };

// Decode-stage transform of the second operand.
enum class Op2Form : uint8_t {
    vec = 0,       // vector passes through intact
    elem_vs = 1,   // v[vs] broadcast
    elem_vs_conj = 2,
    scalar_vs = 3, // vs broadcast
    elem_x = 4,    // v[x] broadcast
    elem_x_conj = 5,
    conj_vec = 6,  // whole-vector conjugate (vdot only)
};

struct Instruction {
    Opcode op = Opcode::trap;
    uint8_t rd = 0;
    uint8_t rs1 = 0;
    uint8_t rs2 = 0;
    int32_t imm = 0;
    Op1Form op1 = Op1Form::vec;
    Op2Form op2 = Op2Form::vec;
    uint8_t idx_reg = 0; // x or vs register per op2 form
    uint8_t va = 0;
    bool post_inc = false;
    AccessMode mode = AccessMode::linear;
    bool has_mask = false;
    uint8_t mask_reg = 0; // vs register; mask = low 16 bits of its packed value
    uint8_t sys_m = 0, sys_n = 0, sys_p = 0, sys_mode = 0;

    bool operator==(const Instruction&) const = default;
};

struct Program {
    std::vector<Instruction> instructions;
    std::map<std::string, int32_t> labels;
    int32_t entry = 0;

    size_t size() const { return instructions.size(); }
    bool empty() const { return instructions.empty(); }
};

const char* opcode_name(Opcode op);

// Fixed 32-bit encodings; decode(encode(i)) == i for every legal
// instruction and every illegal word decodes to a trap.
uint32_t encode(const Instruction& i);
Instruction decode(uint32_t word);

// Flat little-endian .bin image of the encoded program.
std::vector<uint8_t> encode_program(const Program& p);
Program decode_program(const std::vector<uint8_t>& bytes);

struct AssemblyError : std::runtime_error {
    int line;
    AssemblyError(int line_no, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

// Two-pass textual assembler. One instruction or label per line, `#`
// starts a comment. Mnemonics and operand syntax follow the ISA
// reference (docs/ISA.md).
Program assemble(const std::string& source);

// Textual form that reassembles to a structurally equal program.
std::string disassemble(const Program& p);
std::string format_instruction(const Instruction& i,
                               const std::map<int32_t, std::string>* labels_by_index = nullptr);

} // namespace asip
