#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "offloadsim/milp.hpp"

namespace offloadsim::milp {

namespace {

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// MPS-safe name: alphanumerics and underscores, at most 8 characters,
// deduplicated with a numeric suffix when needed.
class Namer {
public:
    explicit Namer(char fallback_prefix) : prefix_(fallback_prefix) {}

    std::string pick(const std::string& wanted, int index) {
        std::string base;
        for (char ch : wanted) {
            if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') base.push_back(ch);
            if (base.size() == 8) break;
        }
        if (base.empty() || std::isdigit(static_cast<unsigned char>(base[0])))
            base = prefix_ + std::to_string(index);
        if (base.size() > 8) base.resize(8);
        std::string name = base;
        int bump = 1;
        while (!used_.insert(name).second) {
            const std::string suffix = std::to_string(bump++);
            name = base.substr(0, 8 - suffix.size()) + suffix;
        }
        return name;
    }

private:
    char prefix_;
    std::set<std::string> used_;
};

void line(std::string& out, std::initializer_list<std::string> fields) {
    // Two-space indent, fields padded to ten columns. Readable as fixed or
    // free format.
    out += ' ';
    for (const std::string& f : fields) {
        out += ' ';
        out += f;
        if (f.size() < 10 && &f != fields.end() - 1) out.append(10 - f.size(), ' ');
    }
    out += '\n';
}

}  // namespace

std::string write_mps(const Problem& problem, const std::string& model_name) {
    const int nv = static_cast<int>(problem.vars.size());
    const int nc = static_cast<int>(problem.cons.size());

    Namer row_namer('R');
    Namer col_namer('X');
    const std::string obj_row = row_namer.pick("OBJ", 0);
    std::vector<std::string> rname(nc), cname(nv);
    for (int i = 0; i < nc; ++i) rname[i] = row_namer.pick(problem.cons[i].name, i + 1);
    for (int j = 0; j < nv; ++j) cname[j] = col_namer.pick(problem.vars[j].name, j + 1);

    std::string out;
    out += "NAME          " + model_name + "\n";
    out += "OBJSENSE\n";
    out += problem.sense == Sense::Maximize ? "    MAX\n" : "    MIN\n";

    out += "ROWS\n";
    line(out, {"N", obj_row});
    for (int i = 0; i < nc; ++i) {
        const char* kind = problem.cons[i].cmp == Cmp::Le   ? "L"
                           : problem.cons[i].cmp == Cmp::Ge ? "G"
                                                            : "E";
        line(out, {kind, rname[i]});
    }

    // Per-column coefficient lists, assembled row by row first.
    std::vector<std::vector<std::pair<int, double>>> col_entries(nv);
    std::vector<double> obj_coef(nv, 0.0);
    for (const LinTerm& t : problem.objective) obj_coef[t.var] += t.coef;
    for (int i = 0; i < nc; ++i)
        for (const LinTerm& t : problem.cons[i].terms)
            if (t.coef != 0.0) col_entries[t.var].emplace_back(i, t.coef);

    out += "COLUMNS\n";
    bool in_integer = false;
    int marker_id = 0;
    for (int j = 0; j < nv; ++j) {
        const bool is_int = problem.vars[j].kind != VarKind::Continuous;
        if (is_int != in_integer) {
            const std::string mk = "MARK" + std::to_string(marker_id++);
            line(out, {mk, "'MARKER'", is_int ? "'INTORG'" : "'INTEND'"});
            in_integer = is_int;
        }
        // The objective entry also declares columns that appear nowhere else.
        line(out, {cname[j], obj_row, fmt_num(obj_coef[j])});
        for (const auto& [row, coef] : col_entries[j])
            line(out, {cname[j], rname[row], fmt_num(coef)});
    }
    if (in_integer) {
        const std::string mk = "MARK" + std::to_string(marker_id++);
        line(out, {mk, "'MARKER'", "'INTEND'"});
    }

    out += "RHS\n";
    for (int i = 0; i < nc; ++i)
        if (problem.cons[i].rhs != 0.0) line(out, {"RHS", rname[i], fmt_num(problem.cons[i].rhs)});

    out += "BOUNDS\n";
    for (int j = 0; j < nv; ++j) {
        const Variable& v = problem.vars[j];
        double lo = v.lb, hi = v.ub;
        if (v.kind == VarKind::Binary) {
            lo = std::max(lo, 0.0);
            hi = std::min(hi, 1.0);
        }
        const bool is_int = v.kind != VarKind::Continuous;
        // Integer columns always get explicit bounds; historic readers
        // otherwise assume an upper bound of one.
        if (is_int || lo != 0.0) {
            if (lo <= -kInf) line(out, {"MI", "BND", cname[j]});
            else line(out, {"LO", "BND", cname[j], fmt_num(lo)});
        }
        if (is_int || hi < kInf) {
            if (hi >= kInf) line(out, {"PL", "BND", cname[j]});
            else line(out, {"UP", "BND", cname[j], fmt_num(hi)});
        }
    }
    out += "ENDATA\n";
    return out;
}

}  // namespace offloadsim::milp
