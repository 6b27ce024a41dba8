#pragma once

// Brute-force reference for the task-count maximization, enumerating compute
// and transmit shares on a 1/50 grid under the original nonlinear
// constraints: true floors, true two-term delays, per-pair rate coupling,
// byte caps and the per-node budgets. Exponential in instance size; meant
// for K <= 2 task types and at most 3 workers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "offloadsim/model.hpp"
#include "offloadsim/rng.hpp"

namespace brute {

constexpr int kGrid = 50;
constexpr double kTol = 1e-9;

struct Cand {
    std::vector<int64_t> m;  // per task type
    std::vector<double> y;   // per task type, 0 on self/unused pairs
    int64_t total = 0;
};

namespace detail {

using offloadsim::model::Instance;
using offloadsim::model::Medium;

// All share splits of one worker across K task types, sum <= 1.
inline void enumerate_splits(int k_left, int budget, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
    if (k_left == 0) {
        out.push_back(cur);
        return;
    }
    for (int a = 0; a <= budget; ++a) {
        cur.push_back(a);
        enumerate_splits(k_left - 1, budget - a, cur, out);
        cur.pop_back();
    }
}

inline std::vector<Cand> worker_candidates(const Instance& ins, int w_node) {
    const int K = static_cast<int>(ins.task_types.size());
    const double T = ins.period_s;
    const double F = ins.nodes[w_node].compute_hz;

    std::vector<std::vector<int>> splits;
    std::vector<int> cur;
    enumerate_splits(K, kGrid, cur, splits);

    std::map<std::vector<int64_t>, std::vector<Cand>> by_m;  // Pareto sets over y
    for (const std::vector<int>& xi : splits) {
        Cand c;
        c.m.assign(K, 0);
        c.y.assign(K, 0.0);
        bool valid = true;
        for (int k = 0; k < K && valid; ++k) {
            if (xi[k] == 0) continue;
            const auto& tt = ins.task_types[k];
            double x = xi[k] / double(kGrid);
            int64_t m = static_cast<int64_t>(std::floor(T * F * x / tt.compute_cycles + kTol));
            if (m < 1) {
                valid = false;  // positive share carrying no task is never useful
                break;
            }
            double cp = tt.compute_cycles / (F * x);
            if (tt.sender == w_node) {
                if (cp > tt.max_delay_s + kTol) valid = false;
            } else {
                double R = ins.links.rate(tt.sender, w_node);
                if (R <= 0.0) {
                    valid = false;
                    break;
                }
                double slack = tt.max_delay_s - cp;
                if (slack <= kTol) {
                    valid = false;
                    break;
                }
                double need = std::max(tt.data_bits * double(m) / (T * R),
                                       tt.data_bits / (R * slack));
                int yi = static_cast<int>(std::ceil(need * kGrid - 1e-9));
                if (yi > kGrid) {
                    valid = false;
                    break;
                }
                c.y[k] = yi / double(kGrid);
            }
            c.m[k] = m;
            c.total += m;
        }
        if (!valid) continue;
        auto& set = by_m[c.m];
        bool dominated = false;
        for (const Cand& o : set) {
            bool le = true;
            for (int k = 0; k < K; ++k) le = le && o.y[k] <= c.y[k] + 1e-12;
            if (le) {
                dominated = true;
                break;
            }
        }
        if (dominated) continue;
        std::erase_if(set, [&](const Cand& o) {
            for (int k = 0; k < K; ++k)
                if (c.y[k] > o.y[k] + 1e-12) return false;
            return true;
        });
        set.push_back(std::move(c));
    }

    std::vector<Cand> out;
    for (auto& [m, set] : by_m)
        for (Cand& c : set) out.push_back(std::move(c));
    std::sort(out.begin(), out.end(), [](const Cand& a, const Cand& b) { return a.total > b.total; });
    return out;
}

struct CombineState {
    const Instance* ins = nullptr;
    std::vector<int> workers;
    std::vector<std::vector<Cand>> cands;
    std::vector<int64_t> suffix_best;
    std::vector<double> ysum;  // [sender * 2 + (medium == V2V)]
    double bytes_lte = 0, bytes_v2v = 0;
    int64_t best = 0;

    void dfs(size_t wi, int64_t obj) {
        best = std::max(best, obj);
        if (wi == workers.size()) return;
        if (obj + suffix_best[wi] <= best) return;
        const int K = static_cast<int>(ins->task_types.size());
        for (const Cand& c : cands[wi]) {
            if (obj + c.total + (wi + 1 < workers.size() ? suffix_best[wi + 1] : 0) <= best)
                break;  // sorted by total: nothing below can improve
            double dl = 0, dv = 0;
            bool ok = true;
            std::vector<std::pair<int, double>> touched;
            for (int k = 0; k < K && ok; ++k) {
                if (c.m[k] == 0) continue;
                const auto& tt = ins->task_types[k];
                if (tt.sender == workers[wi]) continue;
                Medium med = ins->links.med(tt.sender, workers[wi]);
                double load = tt.data_bits * double(c.m[k]);
                (med == Medium::V2V ? dv : dl) += load;
                int bucket = tt.sender * 2 + (med == Medium::V2V ? 1 : 0);
                touched.emplace_back(bucket, c.y[k]);
                ysum[bucket] += c.y[k];
                if (ysum[bucket] > 1.0 + kTol) ok = false;
            }
            if (ok && bytes_lte + dl <= ins->cap_lte_bps * ins->period_s + 1e-6 &&
                bytes_v2v + dv <= ins->cap_v2v_bps * ins->period_s + 1e-6) {
                bytes_lte += dl;
                bytes_v2v += dv;
                dfs(wi + 1, obj + c.total);
                bytes_lte -= dl;
                bytes_v2v -= dv;
            }
            for (auto& [bucket, y] : touched) ysum[bucket] -= y;
        }
        dfs(wi + 1, obj);  // leave this worker idle
    }
};

}  // namespace detail

// Best total task count over the 1/50 share grid.
inline int64_t solve(const offloadsim::model::Instance& ins) {
    detail::CombineState st;
    st.ins = &ins;
    st.workers = ins.workers();
    for (int w : st.workers) st.cands.push_back(detail::worker_candidates(ins, w));
    st.suffix_best.assign(st.workers.size() + 1, 0);
    for (size_t i = st.workers.size(); i-- > 0;) {
        int64_t top = st.cands[i].empty() ? 0 : st.cands[i].front().total;
        st.suffix_best[i] = st.suffix_best[i + 1] + top;
    }
    st.ysum.assign(ins.nodes.size() * 2, 0.0);
    st.dfs(0, 0);
    return st.best;
}

// Small random instance: 1-2 sender cars (self-processing workers), up to
// 3 workers total once extra cars and an edge server are added. Parameter
// sets are chosen so that every true-feasible pair admits an interior
// delay-split grid point at N = 5.
inline offloadsim::model::Instance random_small_instance(offloadsim::Rng& rng) {
    using namespace offloadsim;
    auto pick = [&](std::initializer_list<double> xs) {
        auto it = xs.begin();
        std::advance(it, rng.next_below(xs.size()));
        return *it;
    };

    model::Instance ins;
    ins.period_s = 1.0;
    int K = 1 + static_cast<int>(rng.next_below(2));
    int room = 3 - K;
    bool edge = room > 0 && rng.next_below(2) == 0;
    if (edge) --room;
    int extras = room > 0 ? static_cast<int>(rng.next_below(room + 1)) : 0;

    for (int k = 0; k < K; ++k) {
        model::Node s;
        s.id = "s" + std::to_string(k);
        s.compute_hz = pick({1e9, 2e9});
        s.v2v_capable = rng.next_double() < 0.8;
        s.add_role(model::Role::Sender);
        s.add_role(model::Role::Worker);
        s.add_role(model::Role::Receiver);
        ins.nodes.push_back(s);
    }
    for (int i = 0; i < extras; ++i) {
        model::Node w;
        w.id = "w" + std::to_string(i);
        w.compute_hz = pick({4e9, 5e9});
        w.v2v_capable = true;
        w.add_role(model::Role::Worker);
        w.add_role(model::Role::Receiver);
        ins.nodes.push_back(w);
    }
    if (edge) {
        model::Node e;
        e.id = "edge0";
        e.kind = model::NodeKind::EdgeServer;
        e.compute_hz = pick({5e9, 6e9});
        e.add_role(model::Role::Worker);
        ins.nodes.push_back(e);
    }

    std::vector<model::RawRate> rates;
    for (int k = 0; k < K; ++k) {
        const model::Node& s = ins.nodes[k];
        for (int i = 0; i < extras; ++i) {
            const model::Node& w = ins.nodes[K + i];
            if (s.v2v_capable && w.v2v_capable && rng.next_double() < 0.75)
                rates.push_back({s.id, w.id, pick({6e6, 1e7, 1.2e7, 2.7e7})});
        }
        if (edge && rng.next_double() < 0.9)
            rates.push_back({s.id, ins.nodes.back().id, pick({1e7, 2.5e7, 5e7})});
    }

    std::vector<std::string> errors;
    auto links = model::build_link_table(ins.nodes, rates, errors);
    ins.links = *links;

    for (int k = 0; k < K; ++k) {
        model::TaskType tt;
        tt.id = "tt_s" + std::to_string(k);
        tt.data_bits = pick({4e5, 1.6e6});
        tt.compute_cycles = pick({2e8, 5e8});
        tt.max_delay_s = pick({0.6, 1.0});
        tt.sender = k;
        tt.receivers = {K > 1 ? (k + 1) % K : (extras > 0 ? K : 0)};
        ins.task_types.push_back(tt);
    }

    ins.cap_lte_bps = pick({model::kInfiniteRate, 2.4e7, 8e6});
    ins.cap_v2v_bps = pick({model::kInfiniteRate, 1.6e7});
    return ins;
}

}  // namespace brute
