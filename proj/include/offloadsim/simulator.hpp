#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "offloadsim/assignment.hpp"
#include "offloadsim/model.hpp"
#include "offloadsim/scheduler.hpp"

namespace offloadsim::sim {

// Kind order is the tie-break order for simultaneous events.
enum class EventKind { FrameGenerated, TxComplete, ComputeComplete, Delivered };

struct Event {
    double time_s = 0.0;
    EventKind kind = EventKind::FrameGenerated;
    int task_type = -1;
    int task_index = -1;
    int worker = -1;  // worker index within the period's assignment, -1 if n/a
};

struct TtPeriodMetrics {
    std::string tt_id;
    int64_t generated = 0;
    int64_t in_time = 0;
    int64_t late = 0;
    double tx_delay_sum_s = 0.0;  // over completed tasks; includes sender queue wait
    double cp_delay_sum_s = 0.0;  // over completed tasks; includes worker queue wait
    double bytes_lte = 0.0;
    double bytes_v2v = 0.0;
};

struct PeriodMetrics {
    double period_start_s = 0.0;
    double period_len_s = 1.0;
    int sender_count = 0;
    std::vector<TtPeriodMetrics> per_tt;
    int overdraft_events = 0;     // shares over 1.0 at period start due to carryover
    double max_overdraft = 0.0;

    int64_t generated() const;
    int64_t completed() const;  // in_time + late
    int64_t completed_in_time() const;
    // Tasks per second per sender, counting every completed task.
    double processed_rate() const;
    // Same, counting only tasks that met their deadline.
    double in_time_rate() const;
};

// Channel/processor shares still busy past a period boundary. In-flight work
// keeps its old shares until done, overlapping the next period's shares.
struct CarryoverState {
    struct ProcShare {
        std::string node_id;
        double x = 0.0;
        double until_s = 0.0;
    };
    struct ChanShare {
        std::string sender_id;
        model::Medium medium = model::Medium::None;
        double y = 0.0;
        double until_s = 0.0;
    };
    std::vector<ProcShare> procs;
    std::vector<ChanShare> chans;
};

struct PeriodResult {
    PeriodMetrics metrics;
    CarryoverState carry;
    std::vector<Event> events;  // sorted by (time, kind, task type, task index)
};

// Fluid execution of one period: each (k,w) pair owns a dedicated channel of
// rate R*y and a dedicated processor of rate F*x, each with a FIFO queue.
// Tasks that outlive the period stay on their pipes and are attributed to
// this period's metrics; tasks that can never complete (no channel/processor
// share) count as generated but not delivered.
PeriodResult run_period(const model::Instance& ins, const assign::Assignment& a,
                        const sched::Schedule& schedule, const CarryoverState& carry_in,
                        double period_start_s);

// One CSV row per (period, task type).
extern const char* kMetricsCsvHeader;
std::string metrics_csv(const std::vector<PeriodMetrics>& periods);

}  // namespace offloadsim::sim
