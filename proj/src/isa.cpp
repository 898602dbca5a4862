#include "asipsim/isa.hpp"

#include <stdexcept>

namespace asip {

const char* opcode_name(Opcode op) {
    switch (op) {
    case Opcode::trap: return "trap";
    case Opcode::add: return "add";
    case Opcode::addi: return "addi";
    case Opcode::sub: return "sub";
    case Opcode::and_: return "and";
    case Opcode::or_: return "or";
    case Opcode::slli: return "slli";
    case Opcode::lw: return "lw";
    case Opcode::sw: return "sw";
    case Opcode::beq: return "beq";
    case Opcode::bne: return "bne";
    case Opcode::blt: return "blt";
    case Opcode::jal: return "jal";
    case Opcode::jalr: return "jalr";
    case Opcode::li: return "li";
    case Opcode::halt: return "halt";
    case Opcode::mvxs: return "mvxs";
    case Opcode::mvsx: return "mvsx";
    case Opcode::mvva: return "mvva";
    case Opcode::ldv: return "ldv";
    case Opcode::stv: return "stv";
    case Opcode::addv: return "addv";
    case Opcode::subv: return "subv";
    case Opcode::mulv: return "mulv";
    case Opcode::vmac: return "vmac";
    case Opcode::vdot: return "vdot";
    case Opcode::inv_sqrt: return "inv.sqrt";
    case Opcode::idxv: return "idxv";
    case Opcode::idxvm: return "idxvm";
    case Opcode::sys_sz: return "sys.sz";
    case Opcode::sys_des: return "sys.des";
    case Opcode::sys_mul: return "sys.mul";
    default: return "?";
    }
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("encode: ") + what);
}

uint32_t imm16(int32_t v) {
    require(v >= -32768 && v <= 32767, "immediate out of 16-bit range");
    return static_cast<uint32_t>(v) & 0xFFFFu;
}

int32_t sext16(uint32_t v) { return static_cast<int32_t>(static_cast<int16_t>(v & 0xFFFFu)); }

} // namespace

uint32_t encode(const Instruction& i) {
    uint32_t w = static_cast<uint32_t>(i.op) << 26;
    auto x = [&](uint8_t r) { require(r < kNumX, "x register"); return static_cast<uint32_t>(r); };
    auto v = [&](uint8_t r) { require(r < kNumV, "v register"); return static_cast<uint32_t>(r); };
    auto vs = [&](uint8_t r) { require(r < kNumVs, "vs register"); return static_cast<uint32_t>(r); };
    auto va = [&](uint8_t r) { require(r < kNumVa, "va register"); return static_cast<uint32_t>(r); };

    switch (i.op) {
    case Opcode::add:
    case Opcode::sub:
    case Opcode::and_:
    case Opcode::or_:
        return w | (x(i.rd) << 21) | (x(i.rs1) << 16) | (x(i.rs2) << 11);
    case Opcode::addi:
    case Opcode::slli:
    case Opcode::lw:
    case Opcode::sw:
    case Opcode::jalr:
        require(i.rs2 == 0, "unused rs2 must be zero");
        return w | (x(i.rd) << 21) | (x(i.rs1) << 16) | imm16(i.imm);
    case Opcode::li:
    case Opcode::jal:
        require(i.rs1 == 0 && i.rs2 == 0, "unused source fields must be zero");
        return w | (x(i.rd) << 21) | imm16(i.imm);
    case Opcode::beq:
    case Opcode::bne:
    case Opcode::blt:
        require(i.rd == 0, "branches carry no destination");
        return w | (x(i.rs1) << 21) | (x(i.rs2) << 16) | imm16(i.imm);
    case Opcode::halt:
    case Opcode::trap:
        return w;
    case Opcode::mvxs:
        return w | (vs(i.rd) << 23) | (x(i.rs1) << 18);
    case Opcode::mvsx:
        return w | (x(i.rd) << 21) | (vs(i.rs1) << 18);
    case Opcode::mvva:
        return w | (va(i.rd) << 23) | (x(i.rs1) << 18);
    case Opcode::ldv:
    case Opcode::stv:
        require(!(i.op == Opcode::ldv && i.has_mask), "ldv cannot take a mask");
        return w | (v(i.rd) << 22) | (va(i.va) << 19) | (static_cast<uint32_t>(i.post_inc) << 18) |
               (static_cast<uint32_t>(i.mode) << 16) | (static_cast<uint32_t>(i.has_mask) << 15) |
               (i.has_mask ? (vs(i.mask_reg) << 12) : 0);
    case Opcode::addv:
    case Opcode::subv:
    case Opcode::mulv:
    case Opcode::vmac: {
        require(i.op2 != Op2Form::conj_vec, "conj(vector) second operand is vdot-only");
        uint32_t rs2f = (i.op2 == Op2Form::scalar_vs) ? vs(i.rs2) : v(i.rs2);
        uint32_t idx = 0;
        switch (i.op2) {
        case Op2Form::elem_vs:
        case Op2Form::elem_vs_conj: idx = vs(i.idx_reg); break;
        case Op2Form::elem_x:
        case Op2Form::elem_x_conj: idx = x(i.idx_reg); break;
        default: require(i.idx_reg == 0, "index register unused"); break;
        }
        uint32_t rs1f = (i.op1 == Op1Form::zero) ? 0 : v(i.rs1);
        require(i.op1 != Op1Form::zero || i.rs1 == 0, "zero operand carries no register");
        return w | (v(i.rd) << 22) | (rs1f << 18) | (rs2f << 14) |
               (static_cast<uint32_t>(i.op1) << 12) | (static_cast<uint32_t>(i.op2) << 9) |
               (idx << 4);
    }
    case Opcode::vdot: {
        require(i.op2 == Op2Form::vec || i.op2 == Op2Form::conj_vec, "vdot operand-2 form");
        require(i.op1 != Op1Form::zero || i.rs1 == 0, "zero operand carries no register");
        uint32_t rs1f = (i.op1 == Op1Form::zero) ? 0 : v(i.rs1);
        return w | (vs(i.rd) << 23) | (rs1f << 19) | (v(i.rs2) << 15) |
               (static_cast<uint32_t>(i.op1) << 13) | (static_cast<uint32_t>(i.op2) << 10);
    }
    case Opcode::inv_sqrt:
        return w | (vs(i.rd) << 23) | (vs(i.rs1) << 20);
    case Opcode::idxv:
        return w | (x(i.rd) << 21) | (v(i.rs1) << 17) | (x(i.idx_reg) << 12);
    case Opcode::idxvm:
        return w | (v(i.rd) << 22) | (vs(i.rs1) << 19) | (x(i.idx_reg) << 14);
    case Opcode::sys_sz:
        require(i.sys_m < 32 && i.sys_n < 32 && i.sys_p < 32, "systolic block count");
        require(i.sys_mode < 2, "systolic mode");
        return w | (static_cast<uint32_t>(i.sys_m) << 21) | (static_cast<uint32_t>(i.sys_n) << 16) |
               (static_cast<uint32_t>(i.sys_p) << 11) | (static_cast<uint32_t>(i.sys_mode) << 10);
    case Opcode::sys_des:
        return w | (x(i.rs1) << 21);
    case Opcode::sys_mul:
        return w | (x(i.rs1) << 21) | (x(i.rs2) << 16);
    default:
        throw std::invalid_argument("encode: unknown opcode");
    }
}

Instruction decode(uint32_t w) {
    Instruction i;
    uint32_t opv = w >> 26;
    if (opv == 0 || opv >= static_cast<uint32_t>(Opcode::count_)) return i; // trap
    i.op = static_cast<Opcode>(opv);

    auto f = [&](unsigned hi, unsigned lo) { return (w >> lo) & ((1u << (hi - lo + 1)) - 1); };
    Instruction trap; // default-initialized trap instruction

    switch (i.op) {
    case Opcode::add:
    case Opcode::sub:
    case Opcode::and_:
    case Opcode::or_:
        i.rd = f(25, 21);
        i.rs1 = f(20, 16);
        i.rs2 = f(15, 11);
        if (w & 0x7FF) return trap;
        return i;
    case Opcode::addi:
    case Opcode::slli:
    case Opcode::lw:
    case Opcode::sw:
    case Opcode::jalr:
        i.rd = f(25, 21);
        i.rs1 = f(20, 16);
        i.imm = sext16(w);
        return i;
    case Opcode::li:
    case Opcode::jal:
        i.rd = f(25, 21);
        i.imm = sext16(w);
        if (f(20, 16) != 0) return trap;
        return i;
    case Opcode::beq:
    case Opcode::bne:
    case Opcode::blt:
        i.rs1 = f(25, 21);
        i.rs2 = f(20, 16);
        i.imm = sext16(w);
        return i;
    case Opcode::halt:
        if (w & 0x03FFFFFF) return trap;
        return i;
    case Opcode::mvxs:
        i.rd = f(25, 23);
        i.rs1 = f(22, 18);
        if (w & 0x3FFFF) return trap;
        return i;
    case Opcode::mvsx:
        i.rd = f(25, 21);
        i.rs1 = f(20, 18);
        if (w & 0x3FFFF) return trap;
        return i;
    case Opcode::mvva:
        i.rd = f(25, 23);
        i.rs1 = f(22, 18);
        if (w & 0x3FFFF) return trap;
        return i;
    case Opcode::ldv:
    case Opcode::stv: {
        i.rd = f(25, 22);
        i.va = f(21, 19);
        i.post_inc = f(18, 18);
        uint32_t mode = f(17, 16);
        if (mode > 2) return trap;
        i.mode = static_cast<AccessMode>(mode);
        i.has_mask = f(15, 15);
        i.mask_reg = i.has_mask ? static_cast<uint8_t>(f(14, 12)) : 0;
        if (!i.has_mask && f(14, 12) != 0) return trap;
        if (i.op == Opcode::ldv && i.has_mask) return trap;
        if (w & 0xFFF) return trap;
        return i;
    }
    case Opcode::addv:
    case Opcode::subv:
    case Opcode::mulv:
    case Opcode::vmac: {
        i.rd = f(25, 22);
        i.rs1 = f(21, 18);
        i.rs2 = f(17, 14);
        uint32_t op1 = f(13, 12), op2 = f(11, 9);
        if (op1 > 2 || op2 > 5) return trap;
        i.op1 = static_cast<Op1Form>(op1);
        i.op2 = static_cast<Op2Form>(op2);
        i.idx_reg = f(8, 4);
        if (i.op1 == Op1Form::zero && i.rs1 != 0) return trap;
        switch (i.op2) {
        case Op2Form::elem_vs:
        case Op2Form::elem_vs_conj:
            if (i.idx_reg >= kNumVs) return trap;
            break;
        case Op2Form::scalar_vs:
            if (i.rs2 >= kNumVs) return trap;
            [[fallthrough]];
        case Op2Form::vec:
            if (i.idx_reg != 0) return trap;
            break;
        default: break;
        }
        if (w & 0xF) return trap;
        return i;
    }
    case Opcode::vdot: {
        i.rd = f(25, 23);
        i.rs1 = f(22, 19);
        i.rs2 = f(18, 15);
        uint32_t op1 = f(14, 13), op2 = f(12, 10);
        if (op1 > 2) return trap;
        if (op2 != static_cast<uint32_t>(Op2Form::vec) &&
            op2 != static_cast<uint32_t>(Op2Form::conj_vec))
            return trap;
        i.op1 = static_cast<Op1Form>(op1);
        i.op2 = static_cast<Op2Form>(op2);
        if (i.op1 == Op1Form::zero && i.rs1 != 0) return trap;
        if (w & 0x3FF) return trap;
        return i;
    }
    case Opcode::inv_sqrt:
        i.rd = f(25, 23);
        i.rs1 = f(22, 20);
        if (w & 0xFFFFF) return trap;
        return i;
    case Opcode::idxv:
        i.rd = f(25, 21);
        i.rs1 = f(20, 17);
        i.idx_reg = f(16, 12);
        if (w & 0xFFF) return trap;
        return i;
    case Opcode::idxvm:
        i.rd = f(25, 22);
        i.rs1 = f(21, 19);
        i.idx_reg = f(18, 14);
        if (w & 0x3FFF) return trap;
        return i;
    case Opcode::sys_sz:
        i.sys_m = f(25, 21);
        i.sys_n = f(20, 16);
        i.sys_p = f(15, 11);
        i.sys_mode = f(10, 10);
        if (w & 0x3FF) return trap;
        return i;
    case Opcode::sys_des:
        i.rs1 = f(25, 21);
        if (w & 0x1FFFFF) return trap;
        return i;
    case Opcode::sys_mul:
        i.rs1 = f(25, 21);
        i.rs2 = f(20, 16);
        if (w & 0xFFFF) return trap;
        return i;
    default:
        return trap;
    }
}

std::vector<uint8_t> encode_program(const Program& p) {
    std::vector<uint8_t> out;
    out.reserve(p.instructions.size() * 4);
    for (const auto& ins : p.instructions) {
        uint32_t w = encode(ins);
        out.push_back(static_cast<uint8_t>(w & 0xFF));
        out.push_back(static_cast<uint8_t>((w >> 8) & 0xFF));
        out.push_back(static_cast<uint8_t>((w >> 16) & 0xFF));
        out.push_back(static_cast<uint8_t>((w >> 24) & 0xFF));
    }
    return out;
}

Program decode_program(const std::vector<uint8_t>& bytes) {
    if (bytes.size() % 4 != 0) throw std::invalid_argument("program image is not word-aligned");
    Program p;
    for (size_t i = 0; i < bytes.size(); i += 4) {
        uint32_t w = static_cast<uint32_t>(bytes[i]) | (static_cast<uint32_t>(bytes[i + 1]) << 8) |
                     (static_cast<uint32_t>(bytes[i + 2]) << 16) |
                     (static_cast<uint32_t>(bytes[i + 3]) << 24);
        p.instructions.push_back(decode(w));
    }
    return p;
}

} // namespace asip
