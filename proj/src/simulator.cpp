#include "offloadsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace offloadsim::sim {

namespace {
constexpr double kDeadlineTol = 1e-9;
constexpr double kShareTol = 1e-9;
}  // namespace

int64_t PeriodMetrics::generated() const {
    int64_t n = 0;
    for (const auto& t : per_tt) n += t.generated;
    return n;
}

int64_t PeriodMetrics::completed() const {
    int64_t n = 0;
    for (const auto& t : per_tt) n += t.in_time + t.late;
    return n;
}

int64_t PeriodMetrics::completed_in_time() const {
    int64_t n = 0;
    for (const auto& t : per_tt) n += t.in_time;
    return n;
}

double PeriodMetrics::processed_rate() const {
    if (sender_count == 0) return 0.0;
    return static_cast<double>(completed()) / period_len_s / sender_count;
}

double PeriodMetrics::in_time_rate() const {
    if (sender_count == 0) return 0.0;
    return static_cast<double>(completed_in_time()) / period_len_s / sender_count;
}

PeriodResult run_period(const model::Instance& ins, const assign::Assignment& a,
                        const sched::Schedule& schedule, const CarryoverState& carry_in,
                        double period_start_s) {
    PeriodResult out;
    const std::vector<int> workers = ins.workers();
    const int K = static_cast<int>(ins.task_types.size());
    const int W = static_cast<int>(workers.size());
    const double t0 = period_start_s;
    const double t_end = t0 + ins.period_s;

    PeriodMetrics& pm = out.metrics;
    pm.period_start_s = t0;
    pm.period_len_s = ins.period_s;
    pm.sender_count = ins.sender_count();
    pm.per_tt.resize(K);
    for (int k = 0; k < K; ++k) pm.per_tt[k].tt_id = ins.task_types[k].id;

    // Overdraft check: this period's shares plus carried-over shares that are
    // still busy at the boundary.
    {
        std::vector<double> node_load(ins.nodes.size(), 0.0);
        for (int k = 0; k < K; ++k)
            for (int wi = 0; wi < W; ++wi)
                if (a.m[k][wi] > 0) node_load[workers[wi]] += a.x[k][wi];
        for (const auto& ps : carry_in.procs) {
            const int idx = ins.node_index(ps.node_id);
            if (idx >= 0 && ps.until_s > t0) node_load[idx] += ps.x;
        }
        for (double load : node_load) {
            if (load > 1.0 + kShareTol) {
                ++pm.overdraft_events;
                pm.max_overdraft = std::max(pm.max_overdraft, load - 1.0);
            }
        }
        // Transmit side, per (sender, medium).
        std::vector<double> tx_lte(ins.nodes.size(), 0.0), tx_v2v(ins.nodes.size(), 0.0);
        for (int k = 0; k < K; ++k) {
            const int s = ins.task_types[k].sender;
            for (int wi = 0; wi < W; ++wi) {
                if (a.m[k][wi] == 0) continue;
                tx_lte[s] += a.y_lte[k][wi];
                tx_v2v[s] += a.y_v2v[k][wi];
            }
        }
        for (const auto& cs : carry_in.chans) {
            const int idx = ins.node_index(cs.sender_id);
            if (idx < 0 || cs.until_s <= t0) continue;
            if (cs.medium == model::Medium::LTE) tx_lte[idx] += cs.y;
            if (cs.medium == model::Medium::V2V) tx_v2v[idx] += cs.y;
        }
        for (size_t i = 0; i < ins.nodes.size(); ++i) {
            for (double load : {tx_lte[i], tx_v2v[i]}) {
                if (load > 1.0 + kShareTol) {
                    ++pm.overdraft_events;
                    pm.max_overdraft = std::max(pm.max_overdraft, load - 1.0);
                }
            }
        }
    }

    // Carry forward everything still busy past this period's end.
    for (const auto& ps : carry_in.procs)
        if (ps.until_s > t_end) out.carry.procs.push_back(ps);
    for (const auto& cs : carry_in.chans)
        if (cs.until_s > t_end) out.carry.chans.push_back(cs);

    // Tandem FIFO recursion per pair, in task order.
    constexpr double kNeverBusy = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> tx_free(K, std::vector<double>(W, kNeverBusy));
    std::vector<std::vector<double>> cp_free(K, std::vector<double>(W, kNeverBusy));

    for (int k = 0; k < K; ++k) {
        const model::TaskType& tt = ins.task_types[k];
        TtPeriodMetrics& tm = pm.per_tt[k];
        const auto& arrivals = schedule.arrivals[k];
        const auto& owner = schedule.task_worker[k];
        for (size_t l = 0; l < owner.size(); ++l) {
            const int wi = owner[l];
            const int node = workers[wi];
            const bool self = node == tt.sender;
            const double arrival = t0 + arrivals[l];
            ++tm.generated;
            out.events.push_back(
                {arrival, EventKind::FrameGenerated, k, static_cast<int>(l), wi});

            const double x = a.x[k][wi];
            double tx_done = arrival;
            bool deliverable = x > 0.0;
            if (!self) {
                const model::Medium med = ins.links.med(tt.sender, node);
                const double y =
                    med == model::Medium::LTE ? a.y_lte[k][wi] : a.y_v2v[k][wi];
                const double r = ins.links.rate(tt.sender, node);
                if (med == model::Medium::LTE) tm.bytes_lte += tt.data_bits / 8.0;
                else if (med == model::Medium::V2V) tm.bytes_v2v += tt.data_bits / 8.0;
                if (y <= 0.0 || r <= 0.0) {
                    deliverable = false;
                } else {
                    const double tx_time = tt.data_bits / (r * y);
                    const double tx_start = std::max(arrival, tx_free[k][wi]);
                    tx_done = tx_start + tx_time;
                    tx_free[k][wi] = tx_done;
                    out.events.push_back(
                        {tx_done, EventKind::TxComplete, k, static_cast<int>(l), wi});
                }
            }
            if (!deliverable) continue;  // queues forever on a dead pipe

            const double cp_time =
                tt.compute_cycles / (ins.nodes[node].compute_hz * x);
            const double cp_start = std::max(tx_done, cp_free[k][wi]);
            const double cp_done = cp_start + cp_time;
            cp_free[k][wi] = cp_done;
            out.events.push_back(
                {cp_done, EventKind::ComputeComplete, k, static_cast<int>(l), wi});
            out.events.push_back({cp_done, EventKind::Delivered, k, static_cast<int>(l), wi});

            const double delay = cp_done - arrival;
            if (delay <= tt.max_delay_s + kDeadlineTol) ++tm.in_time;
            else ++tm.late;
            tm.tx_delay_sum_s += tx_done - arrival;
            tm.cp_delay_sum_s += cp_done - tx_done;
        }
    }

    // New pipes that outlive the period join the carryover.
    for (int k = 0; k < K; ++k) {
        const model::TaskType& tt = ins.task_types[k];
        for (int wi = 0; wi < W; ++wi) {
            if (a.m[k][wi] == 0) continue;
            const int node = workers[wi];
            if (cp_free[k][wi] > t_end)
                out.carry.procs.push_back(
                    {ins.nodes[node].id, a.x[k][wi], cp_free[k][wi]});
            if (tx_free[k][wi] > t_end) {
                const model::Medium med = ins.links.med(tt.sender, node);
                const double y =
                    med == model::Medium::LTE ? a.y_lte[k][wi] : a.y_v2v[k][wi];
                out.carry.chans.push_back(
                    {ins.nodes[tt.sender].id, med, y, tx_free[k][wi]});
            }
        }
    }

    std::sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
        if (a.time_s != b.time_s) return a.time_s < b.time_s;
        if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        if (a.task_type != b.task_type) return a.task_type < b.task_type;
        return a.task_index < b.task_index;
    });
    return out;
}

const char* kMetricsCsvHeader =
    "period_start_s,tt_id,generated,in_time,late,mean_tx_delay_s,mean_compute_delay_s,"
    "bytes_lte,bytes_v2v";

std::string metrics_csv(const std::vector<PeriodMetrics>& periods) {
    std::ostringstream os;
    os << kMetricsCsvHeader << "\n";
    os.precision(12);
    for (const PeriodMetrics& pm : periods) {
        for (const TtPeriodMetrics& t : pm.per_tt) {
            const int64_t done = t.in_time + t.late;
            const double mean_tx = done > 0 ? t.tx_delay_sum_s / done : 0.0;
            const double mean_cp = done > 0 ? t.cp_delay_sum_s / done : 0.0;
            os << pm.period_start_s << ',' << t.tt_id << ',' << t.generated << ',' << t.in_time
               << ',' << t.late << ',' << mean_tx << ',' << mean_cp << ',' << t.bytes_lte << ','
               << t.bytes_v2v << "\n";
        }
    }
    return os.str();
}

}  // namespace offloadsim::sim
