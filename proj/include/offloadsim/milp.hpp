#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace offloadsim::milp {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Integer, Binary };
enum class Cmp { Le, Eq, Ge };
enum class Sense { Minimize, Maximize };

enum class SolveStatus { Optimal, Infeasible, Unbounded, GapLimit, NodeLimit, NumericError };

const char* status_name(SolveStatus s);

struct Variable {
    std::string name;
    double lb = 0.0;
    double ub = kInf;
    VarKind kind = VarKind::Continuous;
};

struct LinTerm {
    int var = -1;
    double coef = 0.0;
};

struct Constraint {
    std::string name;
    std::vector<LinTerm> terms;
    Cmp cmp = Cmp::Le;
    double rhs = 0.0;
};

struct Problem {
    std::vector<Variable> vars;
    std::vector<Constraint> cons;
    std::vector<LinTerm> objective;
    Sense sense = Sense::Maximize;

    int add_var(const std::string& name, double lb, double ub, VarKind kind);
    void add_constraint(const std::string& name, std::vector<LinTerm> terms, Cmp cmp, double rhs);
    void set_objective_term(int var, double coef);

    // Structural checks: bound ordering, finite-or-infinite bounds, term
    // references. Returns violations; empty means well-formed.
    std::vector<std::string> validate() const;
};

struct Solution {
    SolveStatus status = SolveStatus::NumericError;
    std::vector<double> values;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double bound = std::numeric_limits<double>::quiet_NaN();  // best dual bound (B&B)
    double gap = std::numeric_limits<double>::quiet_NaN();    // relative bound gap
    int64_t nodes_explored = 0;
    std::string message;
};

struct SolveOptions {
    double integrality_tol = 1e-6;
    double feasibility_tol = 1e-8;
    double gap_tol = 0.0;
    int64_t node_limit = 200000;
};

// Solves the LP relaxation (integrality marks ignored). Deterministic; dense
// bounded-variable simplex with a Bland's-rule fallback on degeneracy.
Solution solve_lp(const Problem& problem);

// Branch and bound over LP relaxations. Deterministic for a fixed problem:
// most-fractional branching with lowest-index tie-breaks, DFS with best-bound
// pruning.
Solution solve_milp(const Problem& problem, const SolveOptions& options = {});

// Largest violation of any constraint/bound by `values` (0 when feasible).
// Integrality is checked only when `check_integrality` is set.
struct FeasReport {
    double max_constraint_violation = 0.0;
    double max_bound_violation = 0.0;
    double max_integrality_violation = 0.0;
    std::string worst;
    bool ok(double feas_tol, double int_tol) const {
        return max_constraint_violation <= feas_tol && max_bound_violation <= feas_tol &&
               max_integrality_violation <= int_tol;
    }
};
FeasReport check_solution(const Problem& problem, const std::vector<double>& values,
                          bool check_integrality = true);

double objective_value(const Problem& problem, const std::vector<double>& values);

// Fixed-format MPS text (ROWS/COLUMNS with INTORG-INTEND/RHS/BOUNDS/ENDATA).
// Maximization problems carry an OBJSENSE section. Unnamed variables and
// rows are auto-named deterministically.
std::string write_mps(const Problem& problem, const std::string& model_name = "OFFLOAD");

}  // namespace offloadsim::milp
