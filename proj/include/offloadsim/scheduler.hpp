#pragma once

#include <cstdint>
#include <vector>

#include "offloadsim/assignment.hpp"
#include "offloadsim/model.hpp"

namespace offloadsim::sched {

// Per task type: evenly spaced arrivals within the period and a task -> worker
// map produced by round-robin over a seeded worker order.
struct Schedule {
    std::vector<std::vector<double>> arrivals;     // [k][l], relative to period start
    std::vector<std::vector<int>> task_worker;     // [k][l] -> worker index
    std::vector<std::vector<int>> worker_order;    // [k], the shuffled order used
};

// Evenly spaced arrivals 0, T/L, 2T/L, ... (L values).
std::vector<double> arrival_times(int64_t l_k, double period_s);

// Round-robin sweep: repeatedly walk worker_order, assigning one task to each
// worker that still has residual capacity, until all sum(m) tasks are placed.
// Returns the worker index of each task l in order.
std::vector<int> round_robin(const std::vector<int64_t>& m,
                             const std::vector<int>& worker_order);

// Applies both operations to every task type of an assignment. The worker
// order is an independent seeded shuffle per task type.
Schedule build_schedule(const model::Instance& ins, const assign::Assignment& a, uint64_t seed);

}  // namespace offloadsim::sched
