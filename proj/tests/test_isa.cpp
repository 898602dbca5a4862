#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "asipsim/isa.hpp"

using namespace asip;

namespace {

// every mnemonic exactly as the ISA table prints it, plus the scalar base
const char* kTableCorpus = R"(
    ldv v0, (va1++) [mode0]
    stv v1, (va4) [mode1] [mask vs1]
    addv v1, v2, v3
    subv v1, v2, v3
    mulv v1, v2, v3
    vmac v1, v3, v2[vs0]
    vdot vs0, v2, conj(v2)
    inv.sqrt vs1, vs0
    idxvm v0, vs0, x1
    idxv x5, v0, x4
    sys.mul (x11), (x10)
    sys.sz 1, 4, 4, 1
    sys.des (x11)
)";

const char* kExtendedCorpus = R"(
# exercises every operand form and the scalar subset
entry:
    li x1, 4096
    li x2, -1
    addi x3, x1, -16
    add x4, x1, x3
    sub x5, x4, x1
    and x6, x5, x2
    or x7, x6, x1
    slli x8, x7, 3
    sw x8, 12(x1)
    lw x9, 12(x1)
    mvxs vs2, x9
    mvsx x10, vs2
    mvva va3, x10
    ldv v1, (va3)
    ldv v2, (va3++) [mode1]
    stv v2, (va3) [mode0]
    stv v2, (va3++)
    addv v4, conj(v1), v2
    subv v5, vzero, v2
    mulv v6, v1, vs2
    mulv v7, v1, v2[x9]
    vmac v7, v1, conj(v2[x9])
    vmac v7, v1, conj(v2[vs3])
    vmac v7, v1, v2[vs3]
    vdot vs4, conj(v1), v2
    vdot vs5, v1, v2
    idxv x11, v7, x9
    idxvm v7, vs5, x9
    beq x1, x3, entry
    bne x1, x3, done
    blt x3, x1, done
    jal x12, entry
    jalr x0, x12, 0
done:
    halt
)";

} // namespace

TEST_CASE("table mnemonics assemble and round trip") {
    Program p = assemble(kTableCorpus);
    CHECK(p.instructions.size() == 13);
    CHECK(p.instructions[0].op == Opcode::ldv);
    CHECK(p.instructions[0].post_inc);
    CHECK(p.instructions[0].mode == AccessMode::shuffled_row);
    CHECK(p.instructions[1].op == Opcode::stv);
    CHECK(p.instructions[1].mode == AccessMode::shuffled_column);
    CHECK(p.instructions[1].has_mask);
    CHECK(p.instructions[1].mask_reg == 1);
    CHECK(p.instructions[2] ==
          Instruction{.op = Opcode::addv, .rd = 1, .rs1 = 2, .rs2 = 3});
    CHECK(p.instructions[5].op == Opcode::vmac);
    CHECK(p.instructions[5].op2 == Op2Form::elem_vs);
    CHECK(p.instructions[6].op2 == Op2Form::conj_vec);
    CHECK(p.instructions[11].sys_m == 1);
    CHECK(p.instructions[11].sys_n == 4);
    CHECK(p.instructions[11].sys_p == 4);
    CHECK(p.instructions[11].sys_mode == 1);

    Program again = assemble(disassemble(p));
    CHECK(again.instructions == p.instructions);
}

TEST_CASE("extended corpus assembles, disassembles and encodes round trip") {
    Program p = assemble(kExtendedCorpus);
    REQUIRE(p.instructions.size() == 34);

    SUBCASE("text round trip") {
        Program again = assemble(disassemble(p));
        CHECK(again.instructions == p.instructions);
    }
    SUBCASE("binary round trip") {
        auto image = encode_program(p);
        CHECK(image.size() == p.instructions.size() * 4);
        Program back = decode_program(image);
        CHECK(back.instructions == p.instructions);
    }
    SUBCASE("every instruction survives encode/decode individually") {
        for (const auto& ins : p.instructions) CHECK(decode(encode(ins)) == ins);
    }
}

TEST_CASE("branch offsets resolve relative to the branch") {
    Program p = assemble("top:\n  addi x1, x1, 1\n  beq x1, x2, top\n  bne x1, x2, end\nend:\n  halt\n");
    CHECK(p.instructions[1].imm == -1);
    CHECK(p.instructions[2].imm == 1);
    CHECK(p.labels.at("top") == 0);
    CHECK(p.labels.at("end") == 3);
}

TEST_CASE("empty program assembles") {
    Program p = assemble("# nothing here\n\n");
    CHECK(p.instructions.empty());
    CHECK(disassemble(p).empty());
}

TEST_CASE("single halt disassembles to halt") {
    Program p = assemble("halt");
    CHECK(disassemble(p) == "    halt\n");
}

TEST_CASE("diagnostics carry line numbers") {
    CHECK_THROWS_WITH_AS(assemble("frobnicate x1"), "line 1: unknown mnemonic 'frobnicate'",
                         AssemblyError);
    CHECK_THROWS_AS(assemble("addi x1, x1\n"), AssemblyError);
    CHECK_THROWS_AS(assemble("\n\nbeq x1, x2, nowhere\n"), AssemblyError);
    CHECK_THROWS_AS(assemble("li x99, 0"), AssemblyError);
    CHECK_THROWS_AS(assemble("li x1, 123456"), AssemblyError);
    CHECK_THROWS_AS(assemble("ldv v1, (va1) [mask vs0]"), AssemblyError);
    CHECK_THROWS_AS(assemble("addv v1, v2, conj(v3)"), AssemblyError);
    CHECK_THROWS_AS(assemble("sys.sz 0, 1, 1, 0"), AssemblyError);
    try {
        assemble("halt\nhalt\nbogus\n");
    } catch (const AssemblyError& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("all-zero and malformed words decode to trap") {
    CHECK(decode(0).op == Opcode::trap);
    CHECK(decode(0xFFFFFFFFu).op == Opcode::trap);
    // valid opcode with junk in reserved low bits
    Instruction h{.op = Opcode::halt};
    CHECK(decode(encode(h) | 1).op == Opcode::trap);
}

TEST_CASE("encode is injective over an enumerated legal subset") {
    std::set<uint32_t> words;
    std::vector<Instruction> legal;
    // scalar ops over a reduced register range
    for (auto op : {Opcode::add, Opcode::sub, Opcode::and_, Opcode::or_})
        for (uint8_t rd : {0, 1, 3})
            for (uint8_t rs1 : {0, 2})
                for (uint8_t rs2 : {0, 5})
                    legal.push_back({.op = op, .rd = rd, .rs1 = rs1, .rs2 = rs2});
    for (int32_t imm : {-2, 0, 7}) {
        legal.push_back({.op = Opcode::addi, .rd = 1, .rs1 = 2, .imm = imm});
        legal.push_back({.op = Opcode::li, .rd = 1, .imm = imm});
        legal.push_back({.op = Opcode::beq, .rs1 = 1, .rs2 = 2, .imm = imm});
        legal.push_back({.op = Opcode::jal, .rd = 1, .imm = imm});
    }
    for (auto op1 : {Op1Form::vec, Op1Form::conj, Op1Form::zero})
        for (auto op2 : {Op2Form::vec, Op2Form::elem_vs, Op2Form::elem_vs_conj, Op2Form::scalar_vs,
                         Op2Form::elem_x, Op2Form::elem_x_conj}) {
            Instruction i{.op = Opcode::addv, .rd = 2, .rs1 = 3, .rs2 = 4, .op1 = op1, .op2 = op2};
            if (op1 == Op1Form::zero) i.rs1 = 0;
            if (op2 == Op2Form::scalar_vs) i.rs2 = 5;
            if (op2 == Op2Form::elem_vs || op2 == Op2Form::elem_vs_conj) i.idx_reg = 3;
            if (op2 == Op2Form::elem_x || op2 == Op2Form::elem_x_conj) i.idx_reg = 9;
            legal.push_back(i);
        }
    for (uint8_t va = 0; va < 4; ++va)
        for (bool inc : {false, true})
            for (auto mode : {AccessMode::linear, AccessMode::shuffled_row, AccessMode::shuffled_column}) {
                legal.push_back({.op = Opcode::ldv, .rd = 1, .va = va, .post_inc = inc, .mode = mode});
                legal.push_back({.op = Opcode::stv, .rd = 1, .va = va, .post_inc = inc, .mode = mode,
                                 .has_mask = true, .mask_reg = 2});
            }
    legal.push_back({.op = Opcode::sys_sz, .sys_m = 1, .sys_n = 8, .sys_p = 1, .sys_mode = 1});
    legal.push_back({.op = Opcode::sys_des, .rs1 = 11});
    legal.push_back({.op = Opcode::sys_mul, .rs1 = 11, .rs2 = 10});
    legal.push_back({.op = Opcode::halt});

    for (const auto& ins : legal) {
        uint32_t w = encode(ins);
        CHECK(words.insert(w).second); // no collisions
        CHECK(decode(w) == ins);
    }
}
