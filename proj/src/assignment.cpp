#include "offloadsim/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "offloadsim/rng.hpp"

namespace offloadsim::assign {

using milp::Cmp;
using milp::LinTerm;
using milp::VarKind;

namespace {

std::string pair_tag(int k, int w) { return std::to_string(k) + "_" + std::to_string(w); }

// Whole tasks per period at share x, with a small guard so solver noise just
// below an integer does not lose a task. floor(1.99995) stays 1.
int64_t floor_tasks(double period_s, double f_hz, double x, double c_cycles) {
    if (x <= 0.0 || c_cycles <= 0.0) return 0;
    return static_cast<int64_t>(std::floor(period_s * f_hz * x / c_cycles + 1e-6));
}

}  // namespace

void Assignment::resize(int k, int w) {
    num_task_types = k;
    num_workers = w;
    x.assign(k, std::vector<double>(w, 0.0));
    y_lte.assign(k, std::vector<double>(w, 0.0));
    y_v2v.assign(k, std::vector<double>(w, 0.0));
    m.assign(k, std::vector<int64_t>(w, 0));
    l.assign(k, 0);
}

const CheckItem* Report::find(const std::string& family) const {
    for (const CheckItem& it : items)
        if (it.family == family) return &it;
    return nullptr;
}

BuildResult build_p1(const model::Instance& ins, int grid_size) {
    BuildResult out;
    if (grid_size < 2) {
        out.errors.push_back("grid size must be at least 2");
        return out;
    }
    const std::vector<int> workers = ins.workers();
    if (workers.empty()) {
        out.errors.push_back("instance has no workers");
        return out;
    }

    const int K = static_cast<int>(ins.task_types.size());
    const int W = static_cast<int>(workers.size());
    const double T = ins.period_s;

    LinearizationArtifacts& art = out.art;
    art.grid_size = grid_size;
    for (int n = 1; n < grid_size; ++n)
        art.alpha.push_back(static_cast<double>(n) / grid_size);
    const int G = static_cast<int>(art.alpha.size());
    art.x_var.assign(K, std::vector<int>(W, -1));
    art.y_var.assign(K, std::vector<int>(W, -1));
    art.v_var.assign(K, std::vector<int>(W, -1));
    art.b_var.assign(K, std::vector<int>(W, -1));
    art.u_var.assign(K, {});
    for (int k = 0; k < K; ++k) art.u_var[k].assign(W, std::vector<int>(G, -1));

    milp::Problem& p = out.problem;
    p.sense = milp::Sense::Maximize;

    // Per-medium cap rows and per-sender/per-worker budget rows are built up
    // while walking the pairs, then emitted if nonempty.
    std::vector<LinTerm> cap_lte, cap_v2v;
    std::vector<std::vector<LinTerm>> worker_budget(W);
    std::vector<std::vector<LinTerm>> sender_lte(ins.nodes.size()), sender_v2v(ins.nodes.size());

    const double cap_lte_rhs = ins.cap_lte_bps * T;
    const double cap_v2v_rhs = ins.cap_v2v_bps * T;
    const double lte_scale = std::isfinite(cap_lte_rhs) ? std::max(1.0, cap_lte_rhs) : 1.0;
    const double v2v_scale = std::isfinite(cap_v2v_rhs) ? std::max(1.0, cap_v2v_rhs) : 1.0;

    for (int k = 0; k < K; ++k) {
        const model::TaskType& tt = ins.task_types[k];
        const int s = tt.sender;
        for (int wi = 0; wi < W; ++wi) {
            const int node = workers[wi];
            const model::Node& wn = ins.nodes[node];
            const double F = wn.compute_hz;
            const double vmax = std::floor(T * F / tt.compute_cycles);
            if (vmax < 1.0) continue;  // cannot fit one task even at x = 1

            const bool self = node == s;
            model::Medium med = model::Medium::Self;
            double R = 0.0;
            if (!self) {
                med = ins.links.med(s, node);
                if (med != model::Medium::LTE && med != model::Medium::V2V) continue;
                R = ins.links.rate(s, node);
                if (R <= 0.0) continue;
                // The pair is usable only if some grid point leaves room for
                // both delay halves at full shares.
                bool grid_ok = false;
                for (double a : art.alpha) {
                    const bool compute_ok = a * tt.max_delay_s * F / tt.compute_cycles >= 1.0;
                    const bool transmit_ok =
                        (1.0 - a) * tt.max_delay_s * R / tt.data_bits >= 1.0;
                    if (compute_ok && transmit_ok) {
                        grid_ok = true;
                        break;
                    }
                }
                if (!grid_ok) continue;
            } else {
                // Self-processing must fit the deadline at x = 1.
                if (tt.max_delay_s * F / tt.compute_cycles < 1.0) continue;
            }

            const std::string tag = pair_tag(k, wi);
            const int xv = p.add_var("X_" + tag, 0.0, 1.0, VarKind::Continuous);
            const int vv = p.add_var("V_" + tag, 0.0, vmax, VarKind::Integer);
            const int bv = p.add_var("B_" + tag, 0.0, 1.0, VarKind::Binary);
            art.x_var[k][wi] = xv;
            art.v_var[k][wi] = vv;
            art.b_var[k][wi] = bv;
            p.set_objective_term(vv, 1.0);

            const double tasks_per_share = T * F / tt.compute_cycles;
            p.add_constraint("FLO_" + tag, {{vv, 1.0}, {xv, -tasks_per_share}}, Cmp::Le, 0.0);
            p.add_constraint("FLS_" + tag, {{xv, tasks_per_share}, {vv, -1.0}}, Cmp::Le,
                             art.floor_slack);
            p.add_constraint("IND_" + tag, {{xv, 1.0}, {bv, -1.0}}, Cmp::Le, 0.0);
            worker_budget[wi].push_back({xv, 1.0});

            if (self) {
                // Compute-only deadline, gated by the indicator:
                // tau*(F/c)*X >= B.
                p.add_constraint("SDL_" + tag,
                                 {{xv, tt.max_delay_s * F / tt.compute_cycles}, {bv, -1.0}},
                                 Cmp::Ge, 0.0);
                continue;
            }

            const int yv = p.add_var(med == model::Medium::LTE ? "YL_" + tag : "YV_" + tag, 0.0,
                                     1.0, VarKind::Continuous);
            art.y_var[k][wi] = yv;

            // Rate coupling d*V <= T*R*Y, scaled to keep coefficients near 1.
            p.add_constraint("RTE_" + tag, {{vv, tt.data_bits / (T * R)}, {yv, -1.0}}, Cmp::Le,
                             0.0);

            for (int g = 0; g < G; ++g) {
                const double a = art.alpha[g];
                const int uv = p.add_var("U_" + tag + "_" + std::to_string(g), 0.0, 1.0,
                                         VarKind::Binary);
                art.u_var[k][wi][g] = uv;
                // (1-U) <= alpha*tau*(F/c)*X  and  (1-U) <= (1-alpha)*tau*(R/d)*Y
                p.add_constraint(
                    "DLC_" + tag + "_" + std::to_string(g),
                    {{xv, a * tt.max_delay_s * F / tt.compute_cycles}, {uv, 1.0}}, Cmp::Ge, 1.0);
                p.add_constraint(
                    "DLT_" + tag + "_" + std::to_string(g),
                    {{yv, (1.0 - a) * tt.max_delay_s * R / tt.data_bits}, {uv, 1.0}}, Cmp::Ge,
                    1.0);
            }
            std::vector<LinTerm> grid_sum;
            for (int g = 0; g < G; ++g) grid_sum.push_back({art.u_var[k][wi][g], 1.0});
            grid_sum.push_back({bv, 1.0});
            p.add_constraint("GRD_" + tag, std::move(grid_sum), Cmp::Le, static_cast<double>(G));

            if (med == model::Medium::LTE) {
                cap_lte.push_back({vv, tt.data_bits / lte_scale});
                sender_lte[s].push_back({yv, 1.0});
            } else {
                cap_v2v.push_back({vv, tt.data_bits / v2v_scale});
                sender_v2v[s].push_back({yv, 1.0});
            }
        }
    }

    if (!cap_lte.empty() && std::isfinite(cap_lte_rhs))
        p.add_constraint("CAPL", std::move(cap_lte), Cmp::Le, cap_lte_rhs / lte_scale);
    if (!cap_v2v.empty() && std::isfinite(cap_v2v_rhs))
        p.add_constraint("CAPV", std::move(cap_v2v), Cmp::Le, cap_v2v_rhs / v2v_scale);
    for (int wi = 0; wi < W; ++wi)
        if (!worker_budget[wi].empty())
            p.add_constraint("CMP_" + std::to_string(wi), std::move(worker_budget[wi]), Cmp::Le,
                             1.0);
    for (size_t s = 0; s < ins.nodes.size(); ++s) {
        if (!sender_lte[s].empty())
            p.add_constraint("TXL_" + std::to_string(s), std::move(sender_lte[s]), Cmp::Le, 1.0);
        if (!sender_v2v[s].empty())
            p.add_constraint("TXV_" + std::to_string(s), std::move(sender_v2v[s]), Cmp::Le, 1.0);
    }
    return out;
}

ExtractResult extract_assignment(const model::Instance& ins, const milp::Solution& sol,
                                 const LinearizationArtifacts& art) {
    ExtractResult out;
    const bool usable = sol.status == milp::SolveStatus::Optimal ||
                        ((sol.status == milp::SolveStatus::GapLimit ||
                          sol.status == milp::SolveStatus::NodeLimit) &&
                         !sol.values.empty());
    if (!usable) {
        out.errors.push_back(std::string("no usable solution: solver status ") +
                             milp::status_name(sol.status));
        return out;
    }

    const std::vector<int> workers = ins.workers();
    const int K = static_cast<int>(ins.task_types.size());
    const int W = static_cast<int>(workers.size());
    Assignment& a = out.assignment;
    a.resize(K, W);

    auto val = [&](int var) { return var >= 0 ? sol.values[var] : 0.0; };

    for (int k = 0; k < K; ++k) {
        const model::TaskType& tt = ins.task_types[k];
        for (int wi = 0; wi < W; ++wi) {
            if (art.x_var[k][wi] < 0) continue;
            double x = std::clamp(val(art.x_var[k][wi]), 0.0, 1.0);
            if (val(art.b_var[k][wi]) < 0.5) x = 0.0;
            const model::Node& wn = ins.nodes[workers[wi]];
            const int64_t mv = floor_tasks(ins.period_s, wn.compute_hz, x, tt.compute_cycles);
            if (mv == 0) continue;  // pair cleared: no tasks, no resources
            a.x[k][wi] = x;
            a.m[k][wi] = mv;
            a.l[k] += mv;
            if (art.y_var[k][wi] >= 0) {
                const double y = std::clamp(val(art.y_var[k][wi]), 0.0, 1.0);
                const model::Medium med = ins.links.med(tt.sender, workers[wi]);
                if (med == model::Medium::LTE) a.y_lte[k][wi] = y;
                else a.y_v2v[k][wi] = y;
            }
        }
    }

    int64_t total = 0;
    for (int k = 0; k < K; ++k) total += a.l[k];
    if (std::isfinite(sol.objective) &&
        std::fabs(static_cast<double>(total) - sol.objective) >
            static_cast<double>(K) * W + 0.5) {
        out.errors.push_back("recomputed task count " + std::to_string(total) +
                             " is inconsistent with solver objective " +
                             std::to_string(sol.objective));
    }
    return out;
}

Report verify_assignment(const model::Instance& ins, const Assignment& a) {
    Report rep;
    const std::vector<int> workers = ins.workers();
    const int K = static_cast<int>(ins.task_types.size());
    const int W = static_cast<int>(workers.size());
    const double T = ins.period_s;
    constexpr double kBudgetTol = 1e-8;
    constexpr double kDelayTol = 1e-9;

    auto add = [&](const std::string& family, double worst, const std::string& detail,
                   double tol) {
        CheckItem it;
        it.family = family;
        it.worst_violation = worst;
        it.pass = worst <= tol;
        it.detail = detail;
        rep.items.push_back(it);
        rep.all_pass = rep.all_pass && it.pass;
    };

    // Floor consistency of m against x.
    double worst_floor = 0.0;
    std::string floor_detail;
    for (int k = 0; k < K; ++k)
        for (int wi = 0; wi < W; ++wi) {
            const model::Node& wn = ins.nodes[workers[wi]];
            const int64_t want =
                floor_tasks(T, wn.compute_hz, a.x[k][wi], ins.task_types[k].compute_cycles);
            const double diff = std::fabs(static_cast<double>(a.m[k][wi] - want));
            if (diff > worst_floor) {
                worst_floor = diff;
                floor_detail = "pair " + pair_tag(k, wi);
            }
        }
    add("floor", worst_floor, floor_detail, 0.0);

    // C1: d*m <= T*R*y per pair with tasks.
    double worst_rate = 0.0;
    std::string rate_detail;
    // C4/C5: true delay per pair with x > 0.
    double worst_delay = 0.0;
    std::string delay_detail;
    // Medium bookkeeping: y on the wrong medium.
    double worst_medium = 0.0;
    std::string medium_detail;
    double bytes_lte = 0.0, bytes_v2v = 0.0;

    for (int k = 0; k < K; ++k) {
        const model::TaskType& tt = ins.task_types[k];
        for (int wi = 0; wi < W; ++wi) {
            const int node = workers[wi];
            const bool self = node == tt.sender;
            const model::Medium med =
                self ? model::Medium::Self : ins.links.med(tt.sender, node);
            const double y_l = a.y_lte[k][wi];
            const double y_v = a.y_v2v[k][wi];
            if ((med != model::Medium::LTE && y_l > 0.0) ||
                (med != model::Medium::V2V && y_v > 0.0)) {
                const double off = std::max(med != model::Medium::LTE ? y_l : 0.0,
                                            med != model::Medium::V2V ? y_v : 0.0);
                if (off > worst_medium) {
                    worst_medium = off;
                    medium_detail = "pair " + pair_tag(k, wi);
                }
            }

            if (med == model::Medium::LTE) bytes_lte += tt.data_bits * a.m[k][wi];
            if (med == model::Medium::V2V) bytes_v2v += tt.data_bits * a.m[k][wi];

            if (a.m[k][wi] > 0 && !self) {
                const double R = ins.links.rate(tt.sender, node);
                const double y = med == model::Medium::LTE ? y_l : y_v;
                const double scale = std::max(1.0, tt.data_bits * a.m[k][wi]);
                const double viol = (tt.data_bits * a.m[k][wi] - T * R * y) / scale;
                if (viol > worst_rate) {
                    worst_rate = viol;
                    rate_detail = "pair " + pair_tag(k, wi);
                }
            }

            if (a.x[k][wi] > 0.0) {
                const double F = ins.nodes[node].compute_hz;
                double delay = tt.compute_cycles / (F * a.x[k][wi]);
                if (!self) {
                    const double R = ins.links.rate(tt.sender, node);
                    const double y = med == model::Medium::LTE ? y_l : y_v;
                    delay += y > 0.0 ? tt.data_bits / (R * y)
                                     : std::numeric_limits<double>::infinity();
                }
                const double viol = delay - tt.max_delay_s;
                if (viol > worst_delay) {
                    worst_delay = viol;
                    delay_detail = "pair " + pair_tag(k, wi);
                }
            }
        }
    }
    add("rate", worst_rate, rate_detail, kBudgetTol);
    add("delay", worst_delay, delay_detail, kDelayTol);
    add("medium", worst_medium, medium_detail, 0.0);

    const double lte_cap = ins.cap_lte_bps * T;
    const double v2v_cap = ins.cap_v2v_bps * T;
    add("cap_lte",
        std::isfinite(lte_cap) ? (bytes_lte - lte_cap) / std::max(1.0, lte_cap) : 0.0,
        "total " + std::to_string(bytes_lte) + " bits", kBudgetTol);
    add("cap_v2v",
        std::isfinite(v2v_cap) ? (bytes_v2v - v2v_cap) / std::max(1.0, v2v_cap) : 0.0,
        "total " + std::to_string(bytes_v2v) + " bits", kBudgetTol);

    double worst_compute = 0.0;
    std::string compute_detail;
    for (int wi = 0; wi < W; ++wi) {
        double sum = 0.0;
        for (int k = 0; k < K; ++k) sum += a.x[k][wi];
        if (sum - 1.0 > worst_compute) {
            worst_compute = sum - 1.0;
            compute_detail = "worker " + std::to_string(wi);
        }
    }
    add("compute_budget", worst_compute, compute_detail, kBudgetTol);

    double worst_tx = 0.0;
    std::string tx_detail;
    for (int s : ins.senders()) {
        double sum_l = 0.0, sum_v = 0.0;
        for (int k = 0; k < K; ++k) {
            if (ins.task_types[k].sender != s) continue;
            for (int wi = 0; wi < W; ++wi) {
                sum_l += a.y_lte[k][wi];
                sum_v += a.y_v2v[k][wi];
            }
        }
        if (sum_l - 1.0 > worst_tx) {
            worst_tx = sum_l - 1.0;
            tx_detail = "sender " + std::to_string(s) + " lte";
        }
        if (sum_v - 1.0 > worst_tx) {
            worst_tx = sum_v - 1.0;
            tx_detail = "sender " + std::to_string(s) + " v2v";
        }
    }
    add("transmit_budget", worst_tx, tx_detail, kBudgetTol);
    return rep;
}

const char* policy_name(Policy p) {
    switch (p) {
        case Policy::Hybrid: return "Hybrid";
        case Policy::VerticalOnly: return "VerticalOnly";
        case Policy::NoOffload: return "NoOffload";
        case Policy::RandomHybrid: return "RandomHybrid";
    }
    return "?";
}

bool parse_policy(const std::string& s, Policy& out) {
    if (s == "Hybrid") out = Policy::Hybrid;
    else if (s == "VerticalOnly") out = Policy::VerticalOnly;
    else if (s == "NoOffload") out = Policy::NoOffload;
    else if (s == "RandomHybrid") out = Policy::RandomHybrid;
    else return false;
    return true;
}

namespace {

PolicyResult solve_policy(const model::Instance& ins, int grid_size,
                          const milp::SolveOptions& options) {
    PolicyResult out;
    BuildResult built = build_p1(ins, grid_size);
    if (!built.ok()) {
        out.errors = built.errors;
        return out;
    }
    const milp::Solution sol = milp::solve_milp(built.problem, options);
    out.solver_status = sol.status;
    out.solver_nodes = sol.nodes_explored;
    out.used_incumbent = sol.status == milp::SolveStatus::GapLimit ||
                         sol.status == milp::SolveStatus::NodeLimit;
    ExtractResult ex = extract_assignment(ins, sol, built.art);
    if (!ex.ok()) {
        out.errors = ex.errors;
        return out;
    }
    out.assignment = std::move(ex.assignment);
    return out;
}

PolicyResult no_offload(const model::Instance& ins) {
    PolicyResult out;
    const std::vector<int> workers = ins.workers();
    const int K = static_cast<int>(ins.task_types.size());
    out.assignment.resize(K, static_cast<int>(workers.size()));
    for (int k = 0; k < K; ++k) {
        const model::TaskType& tt = ins.task_types[k];
        for (size_t wi = 0; wi < workers.size(); ++wi) {
            if (workers[wi] != tt.sender) continue;
            const double F = ins.nodes[workers[wi]].compute_hz;
            out.assignment.x[k][wi] = 1.0;
            out.assignment.m[k][wi] = floor_tasks(ins.period_s, F, 1.0, tt.compute_cycles);
            out.assignment.l[k] = out.assignment.m[k][wi];
            break;
        }
    }
    return out;
}

PolicyResult random_hybrid(const model::Instance& ins, uint64_t seed) {
    PolicyResult out = no_offload(ins);
    const int K = static_cast<int>(ins.task_types.size());
    if (K == 0) return out;
    const std::vector<int> workers = ins.workers();
    Assignment& a = out.assignment;

    Rng rng(derive_seed(seed, hash_str("random_hybrid")));
    for (size_t wi = 0; wi < workers.size(); ++wi) {
        const model::Node& wn = ins.nodes[workers[wi]];
        if (wn.has_role(model::Role::Sender)) continue;  // senders self-process
        const int k = static_cast<int>(rng.next_below(static_cast<uint64_t>(K)));
        a.x[k][wi] = 1.0;
        a.m[k][wi] = floor_tasks(ins.period_s, wn.compute_hz, 1.0,
                                 ins.task_types[k].compute_cycles);
        a.l[k] += a.m[k][wi];
    }

    // Each sender's transmit budget, split equally per medium over the
    // workers it must reach.
    for (int s : ins.senders()) {
        std::vector<std::pair<int, int>> lte_pairs, v2v_pairs;  // (k, wi)
        for (int k = 0; k < K; ++k) {
            if (ins.task_types[k].sender != s) continue;
            for (size_t wi = 0; wi < workers.size(); ++wi) {
                if (a.x[k][wi] <= 0.0 || workers[wi] == s) continue;
                const model::Medium med = ins.links.med(s, workers[wi]);
                if (med == model::Medium::LTE) lte_pairs.push_back({k, static_cast<int>(wi)});
                if (med == model::Medium::V2V) v2v_pairs.push_back({k, static_cast<int>(wi)});
            }
        }
        for (const auto& [k, wi] : lte_pairs)
            a.y_lte[k][wi] = 1.0 / static_cast<double>(lte_pairs.size());
        for (const auto& [k, wi] : v2v_pairs)
            a.y_v2v[k][wi] = 1.0 / static_cast<double>(v2v_pairs.size());
    }
    return out;
}

}  // namespace

PolicyResult compute_assignment(const model::Instance& ins, Policy policy, uint64_t seed,
                                int grid_size, const milp::SolveOptions& options) {
    switch (policy) {
        case Policy::Hybrid:
            return solve_policy(ins, grid_size, options);
        case Policy::VerticalOnly: {
            // Same optimization with every V2V link removed.
            model::Instance vert = ins;
            for (int i = 0; i < vert.links.n; ++i)
                for (int j = 0; j < vert.links.n; ++j) {
                    const size_t idx = static_cast<size_t>(i) * vert.links.n + j;
                    if (vert.links.medium[idx] == model::Medium::V2V) {
                        vert.links.medium[idx] = model::Medium::None;
                        vert.links.rate_bps[idx] = 0.0;
                    }
                }
            return solve_policy(vert, grid_size, options);
        }
        case Policy::NoOffload:
            return no_offload(ins);
        case Policy::RandomHybrid:
            return random_hybrid(ins, seed);
    }
    PolicyResult out;
    out.errors.push_back("unknown policy");
    return out;
}

PolicyResult baseline_assignment(const model::Instance& ins, Policy policy, uint64_t seed,
                                 int grid_size, const milp::SolveOptions& options) {
    return compute_assignment(ins, policy, seed, grid_size, options);
}

}  // namespace offloadsim::assign
