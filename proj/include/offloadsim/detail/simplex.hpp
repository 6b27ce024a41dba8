#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "offloadsim/milp.hpp"

namespace offloadsim::milp::detail {

enum class LpStatus { Optimal, Infeasible, Unbounded, CutoffReached, NeedFallback, Numeric };

// Equality-form LP shared by solve_lp and branch and bound:
//   minimize cost.x   s.t.  A x = rhs,  lb <= x <= ub
// with one slack column appended per row. Objectives of Maximize problems
// are negated on the way in.
struct LpCore {
    int m = 0;   // rows
    int ns = 0;  // structural columns
    int n = 0;   // ns + m
    std::vector<std::vector<std::pair<int, double>>> cols;  // sparse, by column
    std::vector<double> lb, ub;
    std::vector<double> cost;
    std::vector<double> rhs;
    bool maximize = false;
};

LpCore build_core(const Problem& p);

// Dense bounded-variable simplex with an explicit basis inverse, Dantzig
// pricing and a Bland's-rule fallback after a run of degenerate pivots.
// Dual reoptimization supports warm starts across bound changes, which is
// what branch and bound needs.
class DenseSimplex {
public:
    void attach(const LpCore* core);

    // Two-phase primal from a fresh slack/artificial basis. `lo`/`hi` are the
    // current structural bounds (size ns); slack bounds come from the core.
    LpStatus solve_from_scratch(const std::vector<double>& lo, const std::vector<double>& hi);

    // Dual simplex from the current basis after bound changes. Stops early
    // with CutoffReached once the (monotone) objective proves worse than
    // `cutoff` (minimization sense); pass +inf to disable.
    LpStatus reoptimize(const std::vector<double>& lo, const std::vector<double>& hi,
                        double cutoff);

    bool has_basis() const { return !basic_.empty(); }
    double objective_internal() const;  // cost.x, minimization sense
    void extract_structurals(std::vector<double>& out) const;
    double value_of(int col) const;

    // Residual check of the current point against the core (absolute,
    // per-row scaled). Used before trusting a claimed optimum.
    double max_scaled_residual() const;

    // Refactorizes and recomputes the primal point for a clean readout.
    bool refresh();

    int64_t pivot_count = 0;

private:
    enum VStat : uint8_t { Basic = 0, AtLower, AtUpper, FreeNB };

    const LpCore* core_ = nullptr;
    int m_ = 0, nt_ = 0;            // nt_ = core.n + m artificials
    std::vector<double> lo_, hi_;   // size nt_
    std::vector<double> cost1_;     // phase-1 costs
    std::vector<double> cost2_;     // phase-2 costs
    const std::vector<double>* cost_ = nullptr;
    std::vector<int8_t> art_sign_;  // per row; 0 = artificial unused
    std::vector<VStat> vstat_;
    std::vector<int> basic_;
    std::vector<double> binv_;  // m*m row-major
    std::vector<double> xb_;
    std::vector<double> d_;
    std::vector<double> work_col_, work_row_, work_alpha_;
    int pivots_since_factor_ = 0;
    int degen_run_ = 0;
    bool bland_ = false;
    // Reduced costs are dual feasible for the phase-2 objective, so the dual
    // simplex may resume from the current basis.
    bool dual_ready_ = false;

    const std::vector<std::pair<int, double>>& column(int j) const;
    double nb_value(int j) const;
    void set_structural_bounds(const std::vector<double>& lo, const std::vector<double>& hi);
    void compute_xb();
    void compute_reduced();
    bool factorize();
    void pivot_update(int r, const std::vector<double>& w);
    void update_reduced_after_pivot(int r, int entering, int leaving, double theta,
                                    const std::vector<double>& rho);
    LpStatus primal_loop(int64_t iter_limit);
    LpStatus dual_loop(int64_t iter_limit, double cutoff);
    void maybe_refactor();
};

}  // namespace offloadsim::milp::detail
