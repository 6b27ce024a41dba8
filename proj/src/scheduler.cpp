#include "offloadsim/scheduler.hpp"

#include <numeric>

#include "offloadsim/rng.hpp"

namespace offloadsim::sched {

std::vector<double> arrival_times(int64_t l_k, double period_s) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(l_k));
    for (int64_t l = 0; l < l_k; ++l)
        out.push_back(static_cast<double>(l) * period_s / static_cast<double>(l_k));
    return out;
}

std::vector<int> round_robin(const std::vector<int64_t>& m,
                             const std::vector<int>& worker_order) {
    int64_t total = 0;
    for (int w : worker_order) total += m[w];
    std::vector<int> out;
    out.reserve(static_cast<size_t>(total));
    std::vector<int64_t> residual = m;
    int64_t l = 0;
    while (l < total) {
        const int64_t before = l;
        for (int w : worker_order) {
            if (l >= total) break;
            if (residual[w] > 0) {
                out.push_back(w);
                --residual[w];
                ++l;
            }
        }
        if (l == before) break;  // defensive: nothing assignable
    }
    return out;
}

Schedule build_schedule(const model::Instance& ins, const assign::Assignment& a, uint64_t seed) {
    Schedule sch;
    const int K = a.num_task_types;
    sch.arrivals.resize(K);
    sch.task_worker.resize(K);
    sch.worker_order.resize(K);
    for (int k = 0; k < K; ++k) {
        std::vector<int> order(a.num_workers);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(seed, hash_str("worker_order"), static_cast<uint64_t>(k)));
        rng.shuffle(order);
        sch.worker_order[k] = order;
        sch.task_worker[k] = round_robin(a.m[k], order);
        sch.arrivals[k] = arrival_times(static_cast<int64_t>(sch.task_worker[k].size()),
                                        ins.period_s);
    }
    return sch;
}

}  // namespace offloadsim::sched
