#include "asipsim/machine.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace asip {

void Machine::reset() {
    x.fill(0);
    v.fill(zero_word());
    va.fill(0);
    vs.fill(CBf16::zero());
    pc = 0;
    cycles = 0;
    halted = false;
    domain_error = false;
    scalar_mem.fill(0);
    rep_ = ExecutionReport{};
    last_load_ = LoadKind::none;
}

void Machine::load_program(Program p) {
    program_ = std::move(p);
    reset();
    pc = program_.entry;
}

void Machine::write_x(uint8_t r, uint32_t val) {
    if (r != 0) x[r] = val;
    written_ += " x" + std::to_string(r) + "=" + [&] {
        std::ostringstream os;
        os << std::hex << std::setw(8) << std::setfill('0') << (r ? val : 0u);
        return os.str();
    }();
}

unsigned Machine::element_index(const Instruction& ins) const {
    unsigned idx;
    if (ins.op2 == Op2Form::elem_vs || ins.op2 == Op2Form::elem_vs_conj) {
        float f = vs[ins.idx_reg].re.to_f32();
        idx = static_cast<unsigned>(std::lround(f));
        if (!(f >= -0.25f && f < 15.5f))
            throw Fault("vs-indexed lane " + std::to_string(f) + " out of range");
    } else {
        idx = x[ins.idx_reg];
    }
    if (idx >= 16) throw Fault("vector lane index " + std::to_string(idx) + " out of range");
    return idx;
}

VectorWord Machine::operand1(const Instruction& ins) const {
    switch (ins.op1) {
    case Op1Form::zero: return zero_word();
    case Op1Form::conj: {
        VectorWord w = v[ins.rs1];
        for (auto& lane : w) lane = conj(lane);
        return w;
    }
    case Op1Form::vec:
    default: return v[ins.rs1];
    }
}

VectorWord Machine::operand2(const Instruction& ins) const {
    VectorWord w;
    switch (ins.op2) {
    case Op2Form::vec:
        return v[ins.rs2];
    case Op2Form::conj_vec: {
        w = v[ins.rs2];
        for (auto& lane : w) lane = conj(lane);
        return w;
    }
    case Op2Form::scalar_vs:
        w.fill(vs[ins.rs2]);
        return w;
    case Op2Form::elem_vs:
    case Op2Form::elem_x: {
        w.fill(v[ins.rs2][element_index(ins)]);
        return w;
    }
    case Op2Form::elem_vs_conj:
    case Op2Form::elem_x_conj: {
        w.fill(conj(v[ins.rs2][element_index(ins)]));
        return w;
    }
    }
    throw Fault("bad operand-2 form");
}

bool Machine::consumes_loaded_reg(const Instruction& ins) const {
    if (last_load_ == LoadKind::none) return false;
    uint8_t r = last_load_reg_;
    if (last_load_ == LoadKind::scalar) {
        if (r == 0) return false;
        switch (ins.op) {
        case Opcode::add:
        case Opcode::sub:
        case Opcode::and_:
        case Opcode::or_:
            return ins.rs1 == r || ins.rs2 == r;
        case Opcode::addi:
        case Opcode::slli:
        case Opcode::jalr:
        case Opcode::lw:
            return ins.rs1 == r;
        case Opcode::sw:
            return ins.rs1 == r || ins.rd == r;
        case Opcode::beq:
        case Opcode::bne:
        case Opcode::blt:
            return ins.rs1 == r || ins.rs2 == r;
        case Opcode::mvxs:
        case Opcode::mvva:
            return ins.rs1 == r;
        case Opcode::idxv:
        case Opcode::idxvm:
            return ins.idx_reg == r;
        case Opcode::addv:
        case Opcode::subv:
        case Opcode::mulv:
        case Opcode::vmac:
            return (ins.op2 == Op2Form::elem_x || ins.op2 == Op2Form::elem_x_conj) &&
                   ins.idx_reg == r;
        case Opcode::sys_des:
            return ins.rs1 == r;
        case Opcode::sys_mul:
            return ins.rs1 == r || ins.rs2 == r;
        default:
            return false;
        }
    }
    // vector load
    switch (ins.op) {
    case Opcode::addv:
    case Opcode::subv:
    case Opcode::mulv:
        return (ins.op1 != Op1Form::zero && ins.rs1 == r) ||
               (ins.op2 != Op2Form::scalar_vs && ins.rs2 == r);
    case Opcode::vmac:
        return ins.rd == r || ins.rs1 == r || (ins.op2 != Op2Form::scalar_vs && ins.rs2 == r);
    case Opcode::vdot:
        return (ins.op1 != Op1Form::zero && ins.rs1 == r) || ins.rs2 == r;
    case Opcode::stv:
        return ins.rd == r;
    case Opcode::idxv:
        return ins.rs1 == r;
    case Opcode::idxvm:
        return ins.rd == r;
    default:
        return false;
    }
}

void Machine::exec(const Instruction& ins) {
    auto& c = cost;
    uint64_t add_cycles = c.issue;
    LoadKind new_load = LoadKind::none;
    uint8_t new_load_reg = 0;
    int32_t next_pc = pc + 1;

    switch (ins.op) {
    case Opcode::trap:
        throw Fault("decode trap");
    case Opcode::add:
        write_x(ins.rd, x[ins.rs1] + x[ins.rs2]);
        break;
    case Opcode::sub:
        write_x(ins.rd, x[ins.rs1] - x[ins.rs2]);
        break;
    case Opcode::and_:
        write_x(ins.rd, x[ins.rs1] & x[ins.rs2]);
        break;
    case Opcode::or_:
        write_x(ins.rd, x[ins.rs1] | x[ins.rs2]);
        break;
    case Opcode::addi:
        write_x(ins.rd, x[ins.rs1] + static_cast<uint32_t>(ins.imm));
        break;
    case Opcode::slli:
        write_x(ins.rd, x[ins.rs1] << (ins.imm & 31));
        break;
    case Opcode::li:
        write_x(ins.rd, static_cast<uint32_t>(ins.imm));
        break;
    case Opcode::lw: {
        uint32_t addr = x[ins.rs1] + static_cast<uint32_t>(ins.imm);
        if (addr % 4 != 0 || addr + 4 > kScalarMemBytes)
            throw Fault("lw address " + std::to_string(addr) + " invalid");
        uint32_t val = 0;
        for (int i = 3; i >= 0; --i) val = (val << 8) | scalar_mem[addr + i];
        write_x(ins.rd, val);
        new_load = LoadKind::scalar;
        new_load_reg = ins.rd;
        break;
    }
    case Opcode::sw: {
        uint32_t addr = x[ins.rs1] + static_cast<uint32_t>(ins.imm);
        if (addr % 4 != 0 || addr + 4 > kScalarMemBytes)
            throw Fault("sw address " + std::to_string(addr) + " invalid");
        uint32_t val = x[ins.rd];
        for (int i = 0; i < 4; ++i) scalar_mem[addr + i] = static_cast<uint8_t>(val >> (8 * i));
        break;
    }
    case Opcode::beq:
    case Opcode::bne:
    case Opcode::blt: {
        bool taken;
        if (ins.op == Opcode::beq) taken = x[ins.rs1] == x[ins.rs2];
        else if (ins.op == Opcode::bne) taken = x[ins.rs1] != x[ins.rs2];
        else taken = static_cast<int32_t>(x[ins.rs1]) < static_cast<int32_t>(x[ins.rs2]);
        if (taken) {
            next_pc = pc + ins.imm;
            add_cycles += c.branch_taken_penalty;
        }
        break;
    }
    case Opcode::jal:
        write_x(ins.rd, static_cast<uint32_t>(pc + 1));
        next_pc = pc + ins.imm;
        add_cycles += c.branch_taken_penalty;
        break;
    case Opcode::jalr:
        write_x(ins.rd, static_cast<uint32_t>(pc + 1));
        next_pc = static_cast<int32_t>(x[ins.rs1]) + ins.imm;
        add_cycles += c.branch_taken_penalty;
        break;
    case Opcode::halt:
        halted = true;
        break;
    case Opcode::mvxs:
        vs[ins.rd] = unpack(x[ins.rs1]);
        written_ = " vs" + std::to_string(ins.rd);
        break;
    case Opcode::mvsx:
        write_x(ins.rd, pack(vs[ins.rs1]));
        break;
    case Opcode::mvva:
        va[ins.rd] = x[ins.rs1];
        written_ = " va" + std::to_string(ins.rd);
        break;
    case Opcode::ldv: {
        v[ins.rd] = vmem_.read(va[ins.va], ins.mode);
        if (ins.post_inc) ++va[ins.va];
        add_cycles += c.vector_mem_access;
        rep_.mem_read_cycles += c.vector_mem_access;
        new_load = LoadKind::vector;
        new_load_reg = ins.rd;
        written_ = " v" + std::to_string(ins.rd);
        break;
    }
    case Opcode::stv: {
        uint16_t mask = ins.has_mask ? static_cast<uint16_t>(pack(vs[ins.mask_reg]) & 0xFFFFu)
                                     : uint16_t{0xFFFF};
        vmem_.write(va[ins.va], v[ins.rd], mask, ins.mode);
        if (ins.post_inc) ++va[ins.va];
        add_cycles += c.vector_mem_access;
        rep_.mem_write_cycles += c.vector_mem_access;
        break;
    }
    case Opcode::addv:
    case Opcode::subv:
    case Opcode::mulv: {
        VectorWord a = operand1(ins);
        VectorWord b = operand2(ins);
        VectorWord r;
        for (unsigned l = 0; l < 16; ++l)
            r[l] = ins.op == Opcode::addv ? add(a[l], b[l])
                 : ins.op == Opcode::subv ? sub(a[l], b[l])
                                          : mul(a[l], b[l]);
        v[ins.rd] = r;
        written_ = " v" + std::to_string(ins.rd);
        break;
    }
    case Opcode::vmac: {
        VectorWord a = operand1(ins);
        VectorWord b = operand2(ins);
        for (unsigned l = 0; l < 16; ++l) v[ins.rd][l] = mac(v[ins.rd][l], a[l], b[l]);
        written_ = " v" + std::to_string(ins.rd);
        break;
    }
    case Opcode::vdot: {
        VectorWord a = operand1(ins);
        VectorWord b = operand2(ins);
        // fixed binary-tree reduction: (((0+1)+(2+3))+((4+5)+(6+7))) + ...
        std::array<CBf16, 16> t;
        for (unsigned l = 0; l < 16; ++l) t[l] = mul(a[l], b[l]);
        for (unsigned width = 16; width > 1; width /= 2)
            for (unsigned i = 0; i < width / 2; ++i) t[i] = add(t[2 * i], t[2 * i + 1]);
        vs[ins.rd] = t[0];
        add_cycles += c.vdot_extra;
        written_ = " vs" + std::to_string(ins.rd);
        break;
    }
    case Opcode::inv_sqrt: {
        bool err = false;
        vs[ins.rd] = CBf16{inv_sqrt(vs[ins.rs1].re, &err), Bf16{0}};
        add_cycles += c.invsqrt_extra;
        written_ = " vs" + std::to_string(ins.rd);
        if (err) {
            domain_error = true;
            if (halt_on_domain_error) throw Fault("inv.sqrt domain error");
        }
        break;
    }
    case Opcode::idxv: {
        unsigned idx = x[ins.idx_reg];
        if (idx >= 16) throw Fault("idxv lane " + std::to_string(idx) + " out of range");
        write_x(ins.rd, pack(v[ins.rs1][idx]));
        break;
    }
    case Opcode::idxvm: {
        unsigned idx = x[ins.idx_reg];
        if (idx >= 16) throw Fault("idxvm lane " + std::to_string(idx) + " out of range");
        v[ins.rd][idx] = vs[ins.rs1];
        written_ = " v" + std::to_string(ins.rd) + "[" + std::to_string(idx) + "]";
        break;
    }
    case Opcode::sys_sz:
        systolic_.configure_size(ins.sys_m, ins.sys_n, ins.sys_p,
                                 static_cast<SystolicMode>(ins.sys_mode));
        add_cycles = c.systolic_issue;
        break;
    case Opcode::sys_des:
        systolic_.configure_dest(x[ins.rs1]);
        add_cycles = c.systolic_issue;
        break;
    case Opcode::sys_mul: {
        SystolicReport r = systolic_.multiply(vmem_, x[ins.rs1], x[ins.rs2]);
        // the core suspends until the array finishes
        add_cycles = c.systolic_issue + r.total_cycles;
        rep_.systolic_cycles += r.total_cycles;
        ++rep_.systolic_jobs;
        break;
    }
    default:
        throw Fault("unimplemented opcode");
    }

    if (consumes_loaded_reg(ins)) add_cycles += c.load_use_stall;
    last_load_ = new_load;
    last_load_reg_ = new_load_reg;
    cycles += add_cycles;
    ++rep_.instructions;
    ++rep_.op_counts[static_cast<size_t>(ins.op)];
    pc = next_pc;
}

bool Machine::step() {
    if (halted || rep_.status == RunStatus::fault) return false;
    if (pc < 0 || static_cast<size_t>(pc) >= program_.instructions.size()) {
        rep_.status = RunStatus::fault;
        rep_.fault_message = "pc " + std::to_string(pc) + " outside the program";
        rep_.fault_pc = pc;
        return false;
    }
    written_.clear();
    try {
        exec(program_.instructions[pc]);
    } catch (const std::exception& e) {
        rep_.status = RunStatus::fault;
        rep_.fault_message = e.what();
        rep_.fault_pc = pc;
        return false;
    }
    return !halted;
}

ExecutionReport Machine::run(uint64_t max_cycles, std::ostream* trace) {
    while (true) {
        if (halted) {
            rep_.status = RunStatus::halted;
            break;
        }
        if (cycles >= max_cycles) {
            rep_.status = RunStatus::timeout;
            rep_.fault_message = "cycle budget of " + std::to_string(max_cycles) + " exhausted";
            break;
        }
        int32_t at = pc;
        uint64_t cyc = cycles;
        bool more = step();
        if (trace && rep_.status != RunStatus::fault) {
            *trace << cyc << ' ' << at << ' '
                   << format_instruction(program_.instructions[at]) << " ;" << written_ << '\n';
        }
        if (!more) {
            if (rep_.status != RunStatus::fault) rep_.status = RunStatus::halted;
            break;
        }
    }
    rep_.cycles = cycles;
    return rep_;
}

} // namespace asip
