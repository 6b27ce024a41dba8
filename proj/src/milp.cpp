#include "offloadsim/milp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "offloadsim/detail/simplex.hpp"

namespace offloadsim::milp {

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "Optimal";
        case SolveStatus::Infeasible: return "Infeasible";
        case SolveStatus::Unbounded: return "Unbounded";
        case SolveStatus::GapLimit: return "GapLimit";
        case SolveStatus::NodeLimit: return "NodeLimit";
        case SolveStatus::NumericError: return "NumericError";
    }
    return "?";
}

int Problem::add_var(const std::string& name, double lb, double ub, VarKind kind) {
    vars.push_back({name, lb, ub, kind});
    return static_cast<int>(vars.size()) - 1;
}

void Problem::add_constraint(const std::string& name, std::vector<LinTerm> terms, Cmp cmp,
                             double rhs) {
    cons.push_back({name, std::move(terms), cmp, rhs});
}

void Problem::set_objective_term(int var, double coef) {
    for (LinTerm& t : objective) {
        if (t.var == var) {
            t.coef = coef;
            return;
        }
    }
    objective.push_back({var, coef});
}

std::vector<std::string> Problem::validate() const {
    std::vector<std::string> errs;
    const int nv = static_cast<int>(vars.size());
    auto bad_num = [](double v) { return std::isnan(v); };
    for (int j = 0; j < nv; ++j) {
        const Variable& v = vars[j];
        if (bad_num(v.lb) || bad_num(v.ub))
            errs.push_back("variable " + v.name + ": NaN bound");
        else if (v.lb > v.ub)
            errs.push_back("variable " + v.name + ": lower bound above upper bound");
        if (v.lb == kInf || v.ub == -kInf)
            errs.push_back("variable " + v.name + ": bound closes the feasible interval");
    }
    auto check_terms = [&](const std::vector<LinTerm>& terms, const std::string& where) {
        for (const LinTerm& t : terms) {
            if (t.var < 0 || t.var >= nv)
                errs.push_back(where + ": term references unknown variable index " +
                               std::to_string(t.var));
            if (!std::isfinite(t.coef)) errs.push_back(where + ": non-finite coefficient");
        }
    };
    for (const Constraint& c : cons) {
        check_terms(c.terms, "constraint " + c.name);
        if (!std::isfinite(c.rhs)) errs.push_back("constraint " + c.name + ": non-finite rhs");
    }
    check_terms(objective, "objective");
    return errs;
}

double objective_value(const Problem& problem, const std::vector<double>& values) {
    double s = 0.0;
    for (const LinTerm& t : problem.objective)
        if (t.var >= 0 && t.var < static_cast<int>(values.size())) s += t.coef * values[t.var];
    return s;
}

FeasReport check_solution(const Problem& problem, const std::vector<double>& values,
                          bool check_integrality) {
    FeasReport rep;
    if (values.size() != problem.vars.size()) {
        rep.max_bound_violation = kInf;
        rep.worst = "value vector size mismatch";
        return rep;
    }
    for (size_t j = 0; j < problem.vars.size(); ++j) {
        const Variable& v = problem.vars[j];
        double lo = v.lb, hi = v.ub;
        if (v.kind == VarKind::Binary) {
            lo = std::max(lo, 0.0);
            hi = std::min(hi, 1.0);
        }
        const double x = values[j];
        const double scale = std::max(1.0, std::fabs(x));
        const double viol = std::max(lo - x, x - hi) / scale;
        if (viol > rep.max_bound_violation) {
            rep.max_bound_violation = viol;
            rep.worst = "bound " + v.name;
        }
        if (check_integrality && v.kind != VarKind::Continuous) {
            const double iv = std::fabs(x - std::round(x));
            if (iv > rep.max_integrality_violation) {
                rep.max_integrality_violation = iv;
                rep.worst = "integrality " + v.name;
            }
        }
    }
    for (const Constraint& c : problem.cons) {
        double act = 0.0;
        double mag = 0.0;
        for (const LinTerm& t : c.terms) {
            const double contrib = t.coef * values[t.var];
            act += contrib;
            mag = std::max(mag, std::fabs(contrib));
        }
        double viol = 0.0;
        switch (c.cmp) {
            case Cmp::Le: viol = act - c.rhs; break;
            case Cmp::Ge: viol = c.rhs - act; break;
            case Cmp::Eq: viol = std::fabs(act - c.rhs); break;
        }
        const double scale = std::max({1.0, std::fabs(c.rhs), mag});
        viol /= scale;
        if (viol > rep.max_constraint_violation) {
            rep.max_constraint_violation = viol;
            rep.worst = "constraint " + c.name;
        }
    }
    return rep;
}

Solution solve_lp(const Problem& problem) {
    Solution sol;
    const auto errs = problem.validate();
    if (!errs.empty()) {
        sol.status = SolveStatus::NumericError;
        sol.message = "invalid problem: " + errs.front();
        return sol;
    }

    // No variables: the empty point is the only candidate.
    if (problem.vars.empty()) {
        for (const Constraint& c : problem.cons) {
            const bool ok = c.cmp == Cmp::Le   ? 0.0 <= c.rhs
                            : c.cmp == Cmp::Ge ? 0.0 >= c.rhs
                                               : c.rhs == 0.0;
            if (!ok) {
                sol.status = SolveStatus::Infeasible;
                return sol;
            }
        }
        sol.status = SolveStatus::Optimal;
        sol.objective = 0.0;
        sol.bound = 0.0;
        sol.gap = 0.0;
        return sol;
    }

    detail::LpCore core = detail::build_core(problem);
    detail::DenseSimplex spx;
    spx.attach(&core);
    std::vector<double> lo(core.lb.begin(), core.lb.begin() + core.ns);
    std::vector<double> hi(core.ub.begin(), core.ub.begin() + core.ns);
    const detail::LpStatus st = spx.solve_from_scratch(lo, hi);

    switch (st) {
        case detail::LpStatus::Infeasible:
            sol.status = SolveStatus::Infeasible;
            return sol;
        case detail::LpStatus::Unbounded:
            sol.status = SolveStatus::Unbounded;
            return sol;
        case detail::LpStatus::Optimal:
            break;
        default:
            sol.status = SolveStatus::NumericError;
            sol.message = "simplex failed to converge";
            return sol;
    }
    if (!spx.refresh() || spx.max_scaled_residual() > 1e-7) {
        sol.status = SolveStatus::NumericError;
        sol.message = "optimal basis failed the residual check";
        return sol;
    }
    spx.extract_structurals(sol.values);
    sol.status = SolveStatus::Optimal;
    sol.objective = objective_value(problem, sol.values);
    sol.bound = sol.objective;
    sol.gap = 0.0;
    sol.nodes_explored = 0;
    return sol;
}

}  // namespace offloadsim::milp
