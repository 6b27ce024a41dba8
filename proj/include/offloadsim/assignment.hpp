#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offloadsim/milp.hpp"
#include "offloadsim/model.hpp"

namespace offloadsim::assign {

// Resource assignment over (task type k, worker w). The worker axis indexes
// Instance::workers(). x is the worker's compute share, y the sender's
// transmit-time share on the pair's medium, m the resulting whole-task count
// floor(T*F_w*x/c_k).
struct Assignment {
    int num_task_types = 0;
    int num_workers = 0;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> y_lte;
    std::vector<std::vector<double>> y_v2v;
    std::vector<std::vector<int64_t>> m;
    std::vector<int64_t> l;  // per task type, sum of m

    void resize(int k, int w);
};

// Variable ids of the linearization, -1 where a pair has no variables.
// alpha holds the interior grid points n/N for n = 1..N-1; the endpoints are
// vacuous (alpha 0 forces its binary to one, alpha 1 likewise whenever any
// transmission happens) so they are never instantiated.
struct LinearizationArtifacts {
    int grid_size = 0;  // N
    double floor_slack = 0.999;
    std::vector<double> alpha;
    std::vector<std::vector<int>> x_var, y_var, v_var, b_var;
    std::vector<std::vector<std::vector<int>>> u_var;  // [k][w][grid]
};

struct BuildResult {
    milp::Problem problem;
    LinearizationArtifacts art;
    std::vector<std::string> errors;  // nonempty = rejected
    bool ok() const { return errors.empty(); }
};

// Linearized task-count maximization: objective Max sum V_{k,w} subject to
// the floor pair, per-pair rate coupling, per-medium byte caps, the alpha-grid
// delay constraints, per-worker compute budgets and per-sender transmit-time
// budgets. Pairs that cannot carry a single task (no link, floor(T*F/c) == 0,
// or no grid point admitting both delay halves at full shares) are omitted;
// any integral solution would have forced them to zero anyway.
BuildResult build_p1(const model::Instance& ins, int grid_size);

struct ExtractResult {
    Assignment assignment;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

// Reads an Assignment out of a solver point. m is recomputed as
// floor(T*F*x/c) rather than trusting V, so the 0.999 slack can never
// over-count tasks; pairs with m == 0 are cleared entirely.
ExtractResult extract_assignment(const model::Instance& ins, const milp::Solution& sol,
                                 const LinearizationArtifacts& art);

struct CheckItem {
    std::string family;
    bool pass = true;
    double worst_violation = 0.0;  // positive = amount past the limit
    std::string detail;
};

struct Report {
    std::vector<CheckItem> items;
    bool all_pass = true;
    const CheckItem* find(const std::string& family) const;
};

// Re-checks C1..C8 in their original nonlinear form: true floors, true
// per-pair delay d/(R*y) + c/(F*x) <= tau wherever x > 0 (compute term only
// on self-pairs), byte caps, and the three budget families.
Report verify_assignment(const model::Instance& ins, const Assignment& a);

enum class Policy { Hybrid, VerticalOnly, NoOffload, RandomHybrid };

const char* policy_name(Policy p);
bool parse_policy(const std::string& s, Policy& out);

struct PolicyResult {
    Assignment assignment;
    milp::SolveStatus solver_status = milp::SolveStatus::Optimal;
    int64_t solver_nodes = 0;
    bool used_incumbent = false;  // solver stopped early; incumbent taken
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

// Hybrid solves the full problem; VerticalOnly solves it with every V2V link
// removed (edge servers plus self-processing remain); NoOffload self-processes
// each task type at x = 1; RandomHybrid implements the random rule: senders
// self-process, every other worker picks a task type uniformly at random and
// serves it at x = 1, and each sender's transmit budget is split equally over
// its assigned workers per medium. RandomHybrid does not guarantee C1..C5.
PolicyResult compute_assignment(const model::Instance& ins, Policy policy, uint64_t seed,
                                int grid_size = 5, const milp::SolveOptions& options = {});

// Convenience alias for running the comparison policies.
PolicyResult baseline_assignment(const model::Instance& ins, Policy policy, uint64_t seed,
                                 int grid_size = 5, const milp::SolveOptions& options = {});

}  // namespace offloadsim::assign
