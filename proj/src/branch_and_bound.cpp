#include <algorithm>
#include <cmath>
#include <vector>

#include "offloadsim/detail/simplex.hpp"
#include "offloadsim/milp.hpp"

namespace offloadsim::milp {

namespace {

// One branching decision; full node bounds are rebuilt by walking the chain
// of parents, which keeps the open-node stack small.
struct BBNode {
    int parent = -1;
    int var = -1;
    bool tightens_upper = false;
    double value = 0.0;
    double parent_bound = 0.0;  // LP bound inherited from the parent, user sense
};

struct Tree {
    const Problem* p = nullptr;
    detail::LpCore core;
    detail::DenseSimplex spx;
    SolveOptions opt;
    bool maximize = false;
    bool integral_objective = false;

    std::vector<BBNode> pool;
    std::vector<int> open;
    std::vector<double> lo, hi;        // scratch, rebuilt per node
    std::vector<int> chain;            // scratch for bound reconstruction
    std::vector<int> int_vars;

    bool have_inc = false;
    std::vector<double> inc_values;
    double inc_obj = 0.0;

    int64_t nodes = 0;
    std::string note;

    double worse_than_any() const { return maximize ? -kInf : kInf; }
    bool better(double a, double b) const { return maximize ? a > b : a < b; }

    // True when no solution under this bound can beat the incumbent.
    bool prunable(double bound_user) const {
        if (!have_inc) return false;
        if (integral_objective) {
            const double inc_round = std::round(inc_obj);
            if (maximize) return std::floor(bound_user + opt.integrality_tol) <= inc_round;
            return std::ceil(bound_user - opt.integrality_tol) >= inc_round;
        }
        const double margin = 1e-9 * std::max(1.0, std::fabs(inc_obj));
        return maximize ? bound_user <= inc_obj + margin : bound_user >= inc_obj - margin;
    }

    // Objective value (internal minimization sense) beyond which the dual
    // simplex may stop early because the node is prunable.
    double cutoff_internal() const {
        if (!have_inc) return kInf;
        double user_cut;
        if (integral_objective) {
            const double inc_round = std::round(inc_obj);
            user_cut = maximize ? inc_round + 1.0 - opt.integrality_tol
                                : inc_round - 1.0 + opt.integrality_tol;
        } else {
            const double margin = 1e-9 * std::max(1.0, std::fabs(inc_obj));
            user_cut = maximize ? inc_obj + margin : inc_obj - margin;
        }
        return maximize ? -user_cut : user_cut;
    }

    void rebuild_bounds(int node_idx) {
        for (int j = 0; j < core.ns; ++j) {
            lo[j] = core.lb[j];
            hi[j] = core.ub[j];
        }
        chain.clear();
        for (int i = node_idx; i >= 0; i = pool[i].parent)
            if (pool[i].var >= 0) chain.push_back(i);
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            const BBNode& n = pool[*it];
            if (n.tightens_upper) hi[n.var] = std::min(hi[n.var], n.value);
            else lo[n.var] = std::max(lo[n.var], n.value);
        }
    }

    double best_open_bound(double extra) const {
        double best = extra;
        for (int idx : open) {
            const double b = pool[idx].parent_bound;
            if (better(b, best)) best = b;
        }
        return best;
    }
};

}  // namespace

Solution solve_milp(const Problem& problem, const SolveOptions& options) {
    Solution sol;
    const auto errs = problem.validate();
    if (!errs.empty()) {
        sol.status = SolveStatus::NumericError;
        sol.message = "invalid problem: " + errs.front();
        return sol;
    }

    Tree t;
    t.p = &problem;
    t.opt = options;
    t.core = detail::build_core(problem);
    t.spx.attach(&t.core);
    t.maximize = t.core.maximize;
    t.lo.resize(t.core.ns);
    t.hi.resize(t.core.ns);
    for (int j = 0; j < t.core.ns; ++j)
        if (problem.vars[j].kind != VarKind::Continuous) t.int_vars.push_back(j);

    t.integral_objective = !problem.objective.empty();
    for (const LinTerm& term : problem.objective) {
        if (term.coef == 0.0) continue;
        if (problem.vars[term.var].kind == VarKind::Continuous ||
            std::fabs(term.coef - std::round(term.coef)) > 1e-9) {
            t.integral_objective = false;
            break;
        }
    }

    // Pure LP: no integer variables to branch on.
    if (t.int_vars.empty()) {
        sol = solve_lp(problem);
        if (sol.status == SolveStatus::Optimal) sol.nodes_explored = 1;
        return sol;
    }

    t.pool.push_back(BBNode{-1, -1, false, 0.0, t.maximize ? kInf : -kInf});
    t.open.push_back(0);

    std::vector<double> x;
    bool hit_node_limit = false;
    bool gap_stop = false;
    double stop_bound = t.maximize ? kInf : -kInf;

    auto current_gap = [&](double bound) {
        if (!t.have_inc) return kInf;
        const double num = t.maximize ? bound - t.inc_obj : t.inc_obj - bound;
        return std::max(0.0, num) / std::max(1.0, std::fabs(t.inc_obj));
    };

    while (!t.open.empty()) {
        const int idx = t.open.back();
        t.open.pop_back();
        const BBNode& node = t.pool[idx];

        if (t.prunable(node.parent_bound)) continue;
        if (t.nodes >= options.node_limit) {
            hit_node_limit = true;
            stop_bound = t.best_open_bound(node.parent_bound);
            break;
        }
        ++t.nodes;

        t.rebuild_bounds(idx);
        detail::LpStatus st = t.spx.has_basis()
                                  ? t.spx.reoptimize(t.lo, t.hi, t.cutoff_internal())
                                  : detail::LpStatus::NeedFallback;
        if (st == detail::LpStatus::NeedFallback) st = t.spx.solve_from_scratch(t.lo, t.hi);

        if (st == detail::LpStatus::Infeasible || st == detail::LpStatus::CutoffReached) continue;
        if (st == detail::LpStatus::Unbounded) {
            sol.status = SolveStatus::Unbounded;
            sol.nodes_explored = t.nodes;
            sol.message = "relaxation is unbounded";
            return sol;
        }
        if (st != detail::LpStatus::Optimal) {
            sol.status = SolveStatus::NumericError;
            sol.nodes_explored = t.nodes;
            sol.message = "node relaxation failed to converge";
            if (t.have_inc) {
                sol.values = t.inc_values;
                sol.objective = t.inc_obj;
            }
            return sol;
        }

        const double bound_internal = t.spx.objective_internal();
        const double bound_user = t.maximize ? -bound_internal : bound_internal;
        if (t.prunable(bound_user)) continue;

        t.spx.extract_structurals(x);

        // Most fractional integer variable, lowest index on ties.
        int branch_var = -1;
        double branch_score = options.integrality_tol;
        for (int j : t.int_vars) {
            const double f = x[j] - std::floor(x[j]);
            const double score = std::min(f, 1.0 - f);
            if (score > branch_score + 1e-12) {
                branch_score = score;
                branch_var = j;
            }
        }

        if (branch_var < 0) {
            // Integral point. Clean it up and verify before accepting.
            if (!t.spx.refresh() || t.spx.max_scaled_residual() > 1e-7) {
                t.note = "dropped an integral node that failed the residual check";
                continue;
            }
            t.spx.extract_structurals(x);
            std::vector<double> snapped = x;
            for (int j : t.int_vars) snapped[j] = std::round(snapped[j]);
            const FeasReport snap_rep = check_solution(problem, snapped, true);
            const std::vector<double>& cand =
                snap_rep.ok(options.feasibility_tol, options.integrality_tol) ? snapped : x;
            const FeasReport rep = check_solution(problem, cand, true);
            if (!rep.ok(options.feasibility_tol, options.integrality_tol)) {
                t.note = "dropped an integral node that failed the feasibility check (" +
                         rep.worst + ")";
                continue;
            }
            const double obj = objective_value(problem, cand);
            if (!t.have_inc || t.better(obj, t.inc_obj)) {
                t.have_inc = true;
                t.inc_values = cand;
                t.inc_obj = obj;
                if (options.gap_tol > 0.0) {
                    const double gb = t.best_open_bound(bound_user);
                    if (!t.open.empty() && current_gap(gb) <= options.gap_tol) {
                        gap_stop = true;
                        stop_bound = gb;
                        break;
                    }
                }
            }
            continue;
        }

        // Children: explore the side nearest the fractional value first.
        const double xv = x[branch_var];
        const double f = xv - std::floor(xv);
        BBNode down{idx, branch_var, true, std::floor(xv), bound_user};
        BBNode up{idx, branch_var, false, std::ceil(xv), bound_user};
        const bool down_first = f <= 0.5;
        t.pool.push_back(down_first ? up : down);
        t.open.push_back(static_cast<int>(t.pool.size()) - 1);
        t.pool.push_back(down_first ? down : up);
        t.open.push_back(static_cast<int>(t.pool.size()) - 1);

        if (options.gap_tol > 0.0 && t.have_inc) {
            const double gb = t.best_open_bound(t.worse_than_any());
            if (current_gap(gb) <= options.gap_tol) {
                gap_stop = true;
                stop_bound = gb;
                break;
            }
        }
    }

    sol.nodes_explored = t.nodes;
    sol.message = t.note;
    if (hit_node_limit || gap_stop) {
        sol.status = hit_node_limit ? SolveStatus::NodeLimit : SolveStatus::GapLimit;
        if (t.have_inc) {
            sol.values = t.inc_values;
            sol.objective = t.inc_obj;
            sol.bound = t.better(stop_bound, t.inc_obj) ? stop_bound : t.inc_obj;
            sol.gap = current_gap(sol.bound);
        } else {
            sol.bound = stop_bound;
        }
        return sol;
    }
    if (t.have_inc) {
        sol.status = SolveStatus::Optimal;
        sol.values = t.inc_values;
        sol.objective = t.inc_obj;
        sol.bound = t.inc_obj;
        sol.gap = 0.0;
    } else {
        sol.status = SolveStatus::Infeasible;
    }
    return sol;
}

}  // namespace offloadsim::milp
