#include "asipsim/isa.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace asip {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// split on top-level commas
std::vector<std::string> split_operands(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

struct LineParser {
    int line;

    [[noreturn]] void fail(const std::string& msg) const { throw AssemblyError(line, msg); }

    uint8_t reg(const std::string& tok, char prefix, unsigned count, const char* kind) const {
        std::string t = trim(tok);
        size_t plen = (prefix == 'x') ? 1 : 2;
        std::string want = (prefix == 'x') ? "x" : (prefix == 'v' ? "v" : "?");
        if (prefix == 'a') { want = "va"; }
        if (prefix == 's') { want = "vs"; }
        if (prefix == 'v') { want = "v"; plen = 1; }
        if (t.size() <= plen || t.compare(0, plen, want) != 0) fail("expected " + std::string(kind) + " register, got '" + t + "'");
        unsigned n = 0;
        auto [p, ec] = std::from_chars(t.data() + plen, t.data() + t.size(), n);
        if (ec != std::errc() || p != t.data() + t.size() || n >= count)
            fail("bad " + std::string(kind) + " register '" + t + "'");
        return static_cast<uint8_t>(n);
    }
    uint8_t xreg(const std::string& t) const { return reg(t, 'x', kNumX, "scalar"); }
    uint8_t vreg(const std::string& t) const { return reg(t, 'v', kNumV, "vector"); }
    uint8_t vareg(const std::string& t) const { return reg(t, 'a', kNumVa, "vector-address"); }
    uint8_t vsreg(const std::string& t) const { return reg(t, 's', kNumVs, "vector-scalar"); }

    bool is_vs(const std::string& t) const { return t.size() > 2 && t[0] == 'v' && t[1] == 's' && std::isdigit(static_cast<unsigned char>(t[2])); }
    bool is_x(const std::string& t) const { return t.size() > 1 && t[0] == 'x' && std::isdigit(static_cast<unsigned char>(t[1])); }

    int64_t number(const std::string& tok) const {
        std::string t = trim(tok);
        bool neg = false;
        size_t pos = 0;
        if (pos < t.size() && (t[pos] == '-' || t[pos] == '+')) {
            neg = t[pos] == '-';
            ++pos;
        }
        int base = 10;
        if (t.size() >= pos + 2 && t[pos] == '0' && (t[pos + 1] == 'x' || t[pos + 1] == 'X')) {
            base = 16;
            pos += 2;
        }
        int64_t v = 0;
        auto [p, ec] = std::from_chars(t.data() + pos, t.data() + t.size(), v, base);
        if (ec != std::errc() || p != t.data() + t.size()) fail("bad number '" + tok + "'");
        return neg ? -v : v;
    }

    int32_t imm(const std::string& tok) const {
        int64_t v = number(tok);
        // values in [32768, 65535] wrap to the sign-extended pattern
        if (v >= 32768 && v <= 65535) v -= 65536;
        if (v < -32768 || v > 32767) fail("immediate '" + tok + "' out of 16-bit range");
        return static_cast<int32_t>(v);
    }
};

// parsed "(vaN)" / "(vaN++)" address operand
struct VaOperand {
    uint8_t va;
    bool post_inc;
};

VaOperand parse_va_operand(const LineParser& lp, const std::string& tok) {
    std::string t = trim(tok);
    if (t.size() < 3 || t.front() != '(' || t.back() != ')') lp.fail("expected (vaN) operand, got '" + t + "'");
    std::string inner = trim(t.substr(1, t.size() - 2));
    bool inc = false;
    if (inner.size() > 2 && inner.compare(inner.size() - 2, 2, "++") == 0) {
        inc = true;
        inner = trim(inner.substr(0, inner.size() - 2));
    }
    return {lp.vareg(inner), inc};
}

uint8_t parse_paren_xreg(const LineParser& lp, const std::string& tok) {
    std::string t = trim(tok);
    if (t.size() < 3 || t.front() != '(' || t.back() != ')') lp.fail("expected (xN) operand, got '" + t + "'");
    return lp.xreg(trim(t.substr(1, t.size() - 2)));
}

// operand-1 of a vector instruction: vN / conj(vN) / vzero
void parse_op1(const LineParser& lp, const std::string& tok, Instruction& ins) {
    std::string t = trim(tok);
    if (t == "vzero") {
        ins.op1 = Op1Form::zero;
        ins.rs1 = 0;
        return;
    }
    if (t.rfind("conj(", 0) == 0 && t.back() == ')') {
        ins.op1 = Op1Form::conj;
        ins.rs1 = lp.vreg(trim(t.substr(5, t.size() - 6)));
        return;
    }
    ins.op1 = Op1Form::vec;
    ins.rs1 = lp.vreg(t);
}

// operand-2: vN / vN[vsK] / vN[xK] / conj(vN[..]) / vsK
void parse_op2(const LineParser& lp, const std::string& tok, Instruction& ins) {
    std::string t = trim(tok);
    bool conj_wrap = false;
    if (t.rfind("conj(", 0) == 0 && t.back() == ')') {
        conj_wrap = true;
        t = trim(t.substr(5, t.size() - 6));
    }
    size_t lb = t.find('[');
    if (lb != std::string::npos) {
        if (t.back() != ']') lp.fail("malformed indexed operand '" + tok + "'");
        std::string base = trim(t.substr(0, lb));
        std::string idx = trim(t.substr(lb + 1, t.size() - lb - 2));
        ins.rs2 = lp.vreg(base);
        if (lp.is_vs(idx)) {
            ins.idx_reg = lp.vsreg(idx);
            ins.op2 = conj_wrap ? Op2Form::elem_vs_conj : Op2Form::elem_vs;
        } else if (lp.is_x(idx)) {
            ins.idx_reg = lp.xreg(idx);
            ins.op2 = conj_wrap ? Op2Form::elem_x_conj : Op2Form::elem_x;
        } else {
            lp.fail("index must be a vs or x register: '" + idx + "'");
        }
        return;
    }
    if (conj_wrap) lp.fail("conj() on a full second operand is only valid for vdot");
    if (lp.is_vs(t)) {
        ins.op2 = Op2Form::scalar_vs;
        ins.rs2 = lp.vsreg(t);
        return;
    }
    ins.op2 = Op2Form::vec;
    ins.rs2 = lp.vreg(t);
}

struct PendingBranch {
    size_t instr_index;
    std::string label;
    int line;
};

// trailing "[mode0]" / "[mask vs1]" modifier groups
void parse_mem_modifiers(const LineParser& lp, std::string rest, Instruction& ins) {
    rest = trim(rest);
    while (!rest.empty()) {
        if (rest.front() != '[') lp.fail("unexpected text '" + rest + "'");
        size_t close = rest.find(']');
        if (close == std::string::npos) lp.fail("unterminated modifier in '" + rest + "'");
        std::string mod = trim(rest.substr(1, close - 1));
        rest = trim(rest.substr(close + 1));
        if (mod == "mode0") {
            ins.mode = AccessMode::shuffled_row;
        } else if (mod == "mode1") {
            ins.mode = AccessMode::shuffled_column;
        } else if (mod.rfind("mask", 0) == 0) {
            ins.has_mask = true;
            ins.mask_reg = lp.vsreg(trim(mod.substr(4)));
        } else {
            lp.fail("unknown modifier '[" + mod + "]'");
        }
    }
}

} // namespace

Program assemble(const std::string& source) {
    Program prog;
    std::vector<PendingBranch> pending;

    std::istringstream in(source);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (size_t hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);

        // leading labels
        while (true) {
            size_t colon = line.find(':');
            if (colon == std::string::npos) break;
            std::string head = trim(line.substr(0, colon));
            bool plain = !head.empty();
            for (char c : head)
                if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.') plain = false;
            if (!plain) break;
            if (prog.labels.count(head)) throw AssemblyError(line_no, "duplicate label '" + head + "'");
            prog.labels[head] = static_cast<int32_t>(prog.instructions.size());
            line = trim(line.substr(colon + 1));
        }
        if (line.empty()) continue;

        LineParser lp{line_no};
        size_t sp = line.find_first_of(" \t");
        std::string mn = (sp == std::string::npos) ? line : line.substr(0, sp);
        std::string rest = (sp == std::string::npos) ? "" : trim(line.substr(sp + 1));
        auto ops = split_operands(rest);
        auto want = [&](size_t n) {
            if (ops.size() != n)
                lp.fail(mn + " expects " + std::to_string(n) + " operands, got " + std::to_string(ops.size()));
        };

        Instruction ins;
        if (mn == "add" || mn == "sub" || mn == "and" || mn == "or") {
            want(3);
            ins.op = mn == "add" ? Opcode::add : mn == "sub" ? Opcode::sub : mn == "and" ? Opcode::and_ : Opcode::or_;
            ins.rd = lp.xreg(ops[0]);
            ins.rs1 = lp.xreg(ops[1]);
            ins.rs2 = lp.xreg(ops[2]);
        } else if (mn == "addi" || mn == "slli") {
            want(3);
            ins.op = mn == "addi" ? Opcode::addi : Opcode::slli;
            ins.rd = lp.xreg(ops[0]);
            ins.rs1 = lp.xreg(ops[1]);
            ins.imm = lp.imm(ops[2]);
            if (ins.op == Opcode::slli && (ins.imm < 0 || ins.imm > 31)) lp.fail("shift amount out of range");
        } else if (mn == "lw" || mn == "sw") {
            want(2);
            ins.op = mn == "lw" ? Opcode::lw : Opcode::sw;
            ins.rd = lp.xreg(ops[0]);
            std::string& a = ops[1];
            size_t open = a.find('(');
            if (open == std::string::npos || a.back() != ')') lp.fail("expected imm(xN) address");
            ins.imm = open == 0 ? 0 : lp.imm(a.substr(0, open));
            ins.rs1 = lp.xreg(trim(a.substr(open + 1, a.size() - open - 2)));
        } else if (mn == "beq" || mn == "bne" || mn == "blt") {
            want(3);
            ins.op = mn == "beq" ? Opcode::beq : mn == "bne" ? Opcode::bne : Opcode::blt;
            ins.rs1 = lp.xreg(ops[0]);
            ins.rs2 = lp.xreg(ops[1]);
            pending.push_back({prog.instructions.size(), ops[2], line_no});
        } else if (mn == "jal") {
            want(2);
            ins.op = Opcode::jal;
            ins.rd = lp.xreg(ops[0]);
            pending.push_back({prog.instructions.size(), ops[1], line_no});
        } else if (mn == "jalr") {
            want(3);
            ins.op = Opcode::jalr;
            ins.rd = lp.xreg(ops[0]);
            ins.rs1 = lp.xreg(ops[1]);
            ins.imm = lp.imm(ops[2]);
        } else if (mn == "li") {
            want(2);
            ins.op = Opcode::li;
            ins.rd = lp.xreg(ops[0]);
            ins.imm = lp.imm(ops[1]);
        } else if (mn == "halt") {
            want(0);
            ins.op = Opcode::halt;
        } else if (mn == "mvxs") {
            want(2);
            ins.op = Opcode::mvxs;
            ins.rd = lp.vsreg(ops[0]);
            ins.rs1 = lp.xreg(ops[1]);
        } else if (mn == "mvsx") {
            want(2);
            ins.op = Opcode::mvsx;
            ins.rd = lp.xreg(ops[0]);
            ins.rs1 = lp.vsreg(ops[1]);
        } else if (mn == "mvva") {
            want(2);
            ins.op = Opcode::mvva;
            ins.rd = lp.vareg(ops[0]);
            ins.rs1 = lp.xreg(ops[1]);
        } else if (mn == "ldv" || mn == "stv") {
            want(2);
            ins.op = mn == "ldv" ? Opcode::ldv : Opcode::stv;
            ins.rd = lp.vreg(ops[0]);
            std::string& a = ops[1];
            size_t close = a.find(')');
            if (a.empty() || a.front() != '(' || close == std::string::npos)
                lp.fail("expected (vaN) address operand");
            VaOperand vao = parse_va_operand(lp, a.substr(0, close + 1));
            ins.va = vao.va;
            ins.post_inc = vao.post_inc;
            parse_mem_modifiers(lp, a.substr(close + 1), ins);
            if (ins.op == Opcode::ldv && ins.has_mask) lp.fail("ldv cannot take a mask");
        } else if (mn == "addv" || mn == "subv" || mn == "mulv" || mn == "vmac") {
            want(3);
            ins.op = mn == "addv" ? Opcode::addv : mn == "subv" ? Opcode::subv : mn == "mulv" ? Opcode::mulv : Opcode::vmac;
            ins.rd = lp.vreg(ops[0]);
            parse_op1(lp, ops[1], ins);
            parse_op2(lp, ops[2], ins);
            if (ins.op == Opcode::vmac && ins.op1 == Op1Form::zero)
                lp.fail("vmac operand-1 must be a vector");
        } else if (mn == "vdot") {
            want(3);
            ins.op = Opcode::vdot;
            ins.rd = lp.vsreg(ops[0]);
            parse_op1(lp, ops[1], ins);
            std::string t = trim(ops[2]);
            if (t.rfind("conj(", 0) == 0 && t.back() == ')') {
                ins.op2 = Op2Form::conj_vec;
                ins.rs2 = lp.vreg(trim(t.substr(5, t.size() - 6)));
            } else {
                ins.op2 = Op2Form::vec;
                ins.rs2 = lp.vreg(t);
            }
        } else if (mn == "inv.sqrt") {
            want(2);
            ins.op = Opcode::inv_sqrt;
            ins.rd = lp.vsreg(ops[0]);
            ins.rs1 = lp.vsreg(ops[1]);
        } else if (mn == "idxv") {
            want(3);
            ins.op = Opcode::idxv;
            ins.rd = lp.xreg(ops[0]);
            ins.rs1 = lp.vreg(ops[1]);
            ins.idx_reg = lp.xreg(ops[2]);
        } else if (mn == "idxvm") {
            want(3);
            ins.op = Opcode::idxvm;
            ins.rd = lp.vreg(ops[0]);
            ins.rs1 = lp.vsreg(ops[1]);
            ins.idx_reg = lp.xreg(ops[2]);
        } else if (mn == "sys.sz") {
            want(4);
            ins.op = Opcode::sys_sz;
            auto blocks = [&](const std::string& t) {
                int64_t v = lp.number(t);
                if (v < 1 || v > 31) lp.fail("block count must be in [1, 31]");
                return static_cast<uint8_t>(v);
            };
            ins.sys_m = blocks(ops[0]);
            ins.sys_n = blocks(ops[1]);
            ins.sys_p = blocks(ops[2]);
            int64_t mode = lp.number(ops[3]);
            if (mode != 0 && mode != 1) lp.fail("systolic mode must be 0 (normal) or 1 (gramian)");
            ins.sys_mode = static_cast<uint8_t>(mode);
        } else if (mn == "sys.des") {
            want(1);
            ins.op = Opcode::sys_des;
            ins.rs1 = parse_paren_xreg(lp, ops[0]);
        } else if (mn == "sys.mul") {
            want(2);
            ins.op = Opcode::sys_mul;
            ins.rs1 = parse_paren_xreg(lp, ops[0]);
            ins.rs2 = parse_paren_xreg(lp, ops[1]);
        } else {
            lp.fail("unknown mnemonic '" + mn + "'");
        }
        prog.instructions.push_back(ins);
    }

    for (const auto& pb : pending) {
        auto& ins = prog.instructions[pb.instr_index];
        std::string t = trim(pb.label);
        auto it = prog.labels.find(t);
        if (it != prog.labels.end()) {
            ins.imm = it->second - static_cast<int32_t>(pb.instr_index);
        } else if (!t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '-' || t[0] == '+')) {
            LineParser lp{pb.line};
            ins.imm = lp.imm(t); // numeric relative offset
        } else {
            throw AssemblyError(pb.line, "unresolved label '" + t + "'");
        }
    }
    return prog;
}

namespace {

std::string format_op2(const Instruction& i) {
    std::string v2 = "v" + std::to_string(i.rs2);
    switch (i.op2) {
    case Op2Form::vec: return v2;
    case Op2Form::elem_vs: return v2 + "[vs" + std::to_string(i.idx_reg) + "]";
    case Op2Form::elem_vs_conj: return "conj(" + v2 + "[vs" + std::to_string(i.idx_reg) + "])";
    case Op2Form::scalar_vs: return "vs" + std::to_string(i.rs2);
    case Op2Form::elem_x: return v2 + "[x" + std::to_string(i.idx_reg) + "]";
    case Op2Form::elem_x_conj: return "conj(" + v2 + "[x" + std::to_string(i.idx_reg) + "])";
    case Op2Form::conj_vec: return "conj(" + v2 + ")";
    }
    return "?";
}

std::string format_op1(const Instruction& i) {
    switch (i.op1) {
    case Op1Form::vec: return "v" + std::to_string(i.rs1);
    case Op1Form::conj: return "conj(v" + std::to_string(i.rs1) + ")";
    case Op1Form::zero: return "vzero";
    }
    return "?";
}

} // namespace

std::string format_instruction(const Instruction& i,
                               const std::map<int32_t, std::string>* labels_by_offset) {
    auto x = [](uint8_t r) { return "x" + std::to_string(r); };
    auto branch_target = [&](int32_t imm) {
        if (labels_by_offset) {
            auto it = labels_by_offset->find(imm);
            if (it != labels_by_offset->end()) return it->second;
        }
        return std::to_string(imm);
    };
    std::string n = opcode_name(i.op);
    switch (i.op) {
    case Opcode::trap:
    case Opcode::halt: return n;
    case Opcode::add:
    case Opcode::sub:
    case Opcode::and_:
    case Opcode::or_: return n + " " + x(i.rd) + ", " + x(i.rs1) + ", " + x(i.rs2);
    case Opcode::addi:
    case Opcode::slli: return n + " " + x(i.rd) + ", " + x(i.rs1) + ", " + std::to_string(i.imm);
    case Opcode::lw:
    case Opcode::sw: return n + " " + x(i.rd) + ", " + std::to_string(i.imm) + "(" + x(i.rs1) + ")";
    case Opcode::beq:
    case Opcode::bne:
    case Opcode::blt: return n + " " + x(i.rs1) + ", " + x(i.rs2) + ", " + branch_target(i.imm);
    case Opcode::jal: return n + " " + x(i.rd) + ", " + branch_target(i.imm);
    case Opcode::jalr: return n + " " + x(i.rd) + ", " + x(i.rs1) + ", " + std::to_string(i.imm);
    case Opcode::li: return n + " " + x(i.rd) + ", " + std::to_string(i.imm);
    case Opcode::mvxs: return n + " vs" + std::to_string(i.rd) + ", " + x(i.rs1);
    case Opcode::mvsx: return n + " " + x(i.rd) + ", vs" + std::to_string(i.rs1);
    case Opcode::mvva: return n + " va" + std::to_string(i.rd) + ", " + x(i.rs1);
    case Opcode::ldv:
    case Opcode::stv: {
        std::string s = n + " v" + std::to_string(i.rd) + ", (va" + std::to_string(i.va) +
                        (i.post_inc ? "++)" : ")");
        if (i.mode == AccessMode::shuffled_row) s += " [mode0]";
        if (i.mode == AccessMode::shuffled_column) s += " [mode1]";
        if (i.has_mask) s += " [mask vs" + std::to_string(i.mask_reg) + "]";
        return s;
    }
    case Opcode::addv:
    case Opcode::subv:
    case Opcode::mulv:
    case Opcode::vmac:
        return n + " v" + std::to_string(i.rd) + ", " + format_op1(i) + ", " + format_op2(i);
    case Opcode::vdot:
        return n + " vs" + std::to_string(i.rd) + ", " + format_op1(i) + ", " + format_op2(i);
    case Opcode::inv_sqrt: return n + " vs" + std::to_string(i.rd) + ", vs" + std::to_string(i.rs1);
    case Opcode::idxv:
        return n + " " + x(i.rd) + ", v" + std::to_string(i.rs1) + ", x" + std::to_string(i.idx_reg);
    case Opcode::idxvm:
        return n + " v" + std::to_string(i.rd) + ", vs" + std::to_string(i.rs1) + ", x" +
               std::to_string(i.idx_reg);
    case Opcode::sys_sz:
        return n + " " + std::to_string(i.sys_m) + ", " + std::to_string(i.sys_n) + ", " +
               std::to_string(i.sys_p) + ", " + std::to_string(i.sys_mode);
    case Opcode::sys_des: return n + " (" + x(i.rs1) + ")";
    case Opcode::sys_mul: return n + " (" + x(i.rs1) + "), (" + x(i.rs2) + ")";
    default: return "trap";
    }
}

std::string disassemble(const Program& p) {
    // collect branch/jump targets so labels regenerate
    std::map<int32_t, std::string> label_at_index;
    for (size_t pc = 0; pc < p.instructions.size(); ++pc) {
        const auto& ins = p.instructions[pc];
        if (ins.op == Opcode::beq || ins.op == Opcode::bne || ins.op == Opcode::blt ||
            ins.op == Opcode::jal) {
            int32_t target = static_cast<int32_t>(pc) + ins.imm;
            if (!label_at_index.count(target)) label_at_index[target] = "L" + std::to_string(target);
        }
    }
    std::ostringstream out;
    for (size_t pc = 0; pc < p.instructions.size(); ++pc) {
        if (auto it = label_at_index.find(static_cast<int32_t>(pc)); it != label_at_index.end())
            out << it->second << ":\n";
        std::map<int32_t, std::string> rel;
        const auto& ins = p.instructions[pc];
        if (ins.op == Opcode::beq || ins.op == Opcode::bne || ins.op == Opcode::blt ||
            ins.op == Opcode::jal) {
            int32_t target = static_cast<int32_t>(pc) + ins.imm;
            rel[ins.imm] = label_at_index.at(target);
        }
        out << "    " << format_instruction(ins, rel.empty() ? nullptr : &rel) << "\n";
    }
    // a trailing label (branch to end) still needs to appear
    if (auto it = label_at_index.find(static_cast<int32_t>(p.instructions.size()));
        it != label_at_index.end())
        out << it->second << ":\n";
    return out.str();
}

} // namespace asip
