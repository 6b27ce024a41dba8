#include "offloadsim/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "offloadsim/instance_io.hpp"
#include "offloadsim/rng.hpp"
#include "offloadsim/scheduler.hpp"

namespace offloadsim::exp {

using nlohmann::json;

const char* kSummaryCsvHeader =
    "sweep_key,sweep_value,policy,n_runs,processed_rate_mean,processed_rate_ci95,"
    "in_time_rate_mean,in_time_rate_ci95,total_delay_mean_s,total_delay_ci95_s,"
    "tx_delay_mean_s,compute_delay_mean_s,bytes_lte_mean,bytes_v2v_mean";

const char* kRunsCsvHeader =
    "sweep_key,sweep_value,policy,seed,file,used_incumbent,skipped_periods,completed,"
    "in_time,processed_rate,in_time_rate,mean_total_delay_s";

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

int64_t SimRun::completed() const {
    int64_t c = 0;
    for (const sim::PeriodMetrics& p : periods) c += p.completed();
    return c;
}

int64_t SimRun::completed_in_time() const {
    int64_t c = 0;
    for (const sim::PeriodMetrics& p : periods) c += p.completed_in_time();
    return c;
}

double SimRun::processed_rate() const {
    double denom = 0.0;
    for (const sim::PeriodMetrics& p : periods) denom += p.period_len_s * p.sender_count;
    return denom > 0 ? static_cast<double>(completed()) / denom : 0.0;
}

double SimRun::in_time_rate() const {
    double denom = 0.0;
    for (const sim::PeriodMetrics& p : periods) denom += p.period_len_s * p.sender_count;
    return denom > 0 ? static_cast<double>(completed_in_time()) / denom : 0.0;
}

double SimRun::mean_tx_delay_s() const {
    double sum = 0.0;
    int64_t n = completed();
    for (const sim::PeriodMetrics& p : periods)
        for (const sim::TtPeriodMetrics& t : p.per_tt) sum += t.tx_delay_sum_s;
    return n > 0 ? sum / static_cast<double>(n) : std::nan("");
}

double SimRun::mean_compute_delay_s() const {
    double sum = 0.0;
    int64_t n = completed();
    for (const sim::PeriodMetrics& p : periods)
        for (const sim::TtPeriodMetrics& t : p.per_tt) sum += t.cp_delay_sum_s;
    return n > 0 ? sum / static_cast<double>(n) : std::nan("");
}

double SimRun::mean_total_delay_s() const {
    double tx = mean_tx_delay_s();
    double cp = mean_compute_delay_s();
    return tx + cp;
}

double SimRun::total_bytes_lte() const {
    double sum = 0.0;
    for (const sim::PeriodMetrics& p : periods)
        for (const sim::TtPeriodMetrics& t : p.per_tt) sum += t.bytes_lte;
    return sum;
}

double SimRun::total_bytes_v2v() const {
    double sum = 0.0;
    for (const sim::PeriodMetrics& p : periods)
        for (const sim::TtPeriodMetrics& t : p.per_tt) sum += t.bytes_v2v;
    return sum;
}

SimRun run_simulation(const scenario::ScenarioConfig& cfg, const scenario::TraceTimeline& timeline,
                      assign::Policy policy, int grid_size, const milp::SolveOptions& solver,
                      double duration_s, uint64_t run_seed) {
    SimRun out;
    scenario::RoleTracker tracker;
    sim::CarryoverState carry;

    for (int p = 0; p * cfg.period_s < duration_s - 1e-9; ++p) {
        double t = p * cfg.period_s;
        model::Instance ins = scenario::snapshot_instance(timeline, t, cfg, tracker);

        auto skip = [&](const std::string& why) {
            out.skipped_periods++;
            out.notes.push_back("period " + std::to_string(p) + ": " + why);
            sim::PeriodMetrics m;
            m.period_start_s = t;
            m.period_len_s = cfg.period_s;
            out.periods.push_back(m);
            carry = sim::CarryoverState{};  // the micro cloud dissolved, pipes with it
        };

        std::vector<std::string> problems = model::validate_instance(ins);
        if (!problems.empty()) {
            skip(problems.front());
            continue;
        }

        assign::PolicyResult pr = assign::compute_assignment(
            ins, policy, derive_seed(run_seed, hash_str("policy"), static_cast<uint64_t>(p)),
            grid_size, solver);
        if (!pr.ok()) {
            skip(pr.errors.front());
            continue;
        }
        out.used_incumbent |= pr.used_incumbent;

        sched::Schedule schedule = sched::build_schedule(
            ins, pr.assignment,
            derive_seed(run_seed, hash_str("schedule"), static_cast<uint64_t>(p)));
        sim::PeriodResult res = sim::run_period(ins, pr.assignment, schedule, carry, t);
        out.periods.push_back(res.metrics);
        carry = std::move(res.carry);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spec JSON

std::optional<ExperimentSpec> load_spec_json(const std::string& text,
                                             std::vector<std::string>& errors) {
    size_t initial_errors = errors.size();
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        errors.push_back("spec: not a JSON object");
        return std::nullopt;
    }

    ExperimentSpec spec;
    for (auto it = root.begin(); it != root.end(); ++it) {
        const std::string& k = it.key();
        if (k != "config" && k != "policies" && k != "sweep" && k != "seeds" &&
            k != "duration_s" && k != "solver" && k != "output_dir")
            errors.push_back("spec: unknown key \"" + k + "\"");
    }

    if (!root.contains("config")) {
        errors.push_back("spec: config missing (path string or inline object)");
    } else if (root["config"].is_string()) {
        spec.config_path = root["config"].get<std::string>();
    } else if (root["config"].is_object()) {
        spec.config_inline = root["config"].dump();
    } else {
        errors.push_back("spec: config must be a path string or an inline object");
    }

    if (!root.contains("policies") || !root["policies"].is_array() ||
        root["policies"].empty()) {
        errors.push_back("spec: policies must be a non-empty array");
    } else {
        for (const json& jp : root["policies"]) {
            assign::Policy p;
            if (!jp.is_string() || !assign::parse_policy(jp.get<std::string>(), p))
                errors.push_back("spec: unknown policy " + jp.dump());
            else
                spec.policies.push_back(p);
        }
    }

    if (root.contains("sweep")) {
        const json& sw = root["sweep"];
        if (!sw.is_object() || !sw.contains("key") || !sw["key"].is_string() ||
            !sw.contains("values") || !sw["values"].is_array() || sw["values"].empty()) {
            errors.push_back("spec: sweep needs a key string and a non-empty values array");
        } else {
            spec.sweep_key = sw["key"].get<std::string>();
            for (const json& v : sw["values"]) {
                if (!v.is_primitive() || v.is_null())
                    errors.push_back("spec: sweep values must be scalars");
                else
                    spec.sweep_values.push_back(v.dump());
            }
        }
    }

    if (root.contains("seeds")) {
        if (!root["seeds"].is_array() || root["seeds"].empty()) {
            errors.push_back("spec: seeds must be a non-empty array");
        } else {
            for (const json& js : root["seeds"]) {
                if (!js.is_number_integer() && !js.is_number_unsigned())
                    errors.push_back("spec: seeds must be integers");
                else
                    spec.seeds.push_back(js.get<uint64_t>());
            }
        }
    } else {
        spec.seeds = {1};
    }

    if (root.contains("duration_s")) {
        if (!root["duration_s"].is_number() || !(root["duration_s"].get<double>() > 0))
            errors.push_back("spec: duration_s must be a positive number");
        else
            spec.duration_s = root["duration_s"].get<double>();
    }

    if (root.contains("solver")) {
        const json& so = root["solver"];
        if (!so.is_object()) {
            errors.push_back("spec: solver must be an object");
        } else {
            for (auto it = so.begin(); it != so.end(); ++it) {
                const std::string& k = it.key();
                if (k != "n_grid" && k != "node_limit" && k != "gap_tol")
                    errors.push_back("spec: unknown solver key \"" + k + "\"");
            }
            if (so.contains("n_grid")) {
                if (!so["n_grid"].is_number_integer() || so["n_grid"].get<int>() < 2)
                    errors.push_back("spec: solver.n_grid must be an integer >= 2");
                else
                    spec.grid_size = so["n_grid"].get<int>();
            }
            if (so.contains("node_limit")) {
                if (!so["node_limit"].is_number_integer() || so["node_limit"].get<int64_t>() < 1)
                    errors.push_back("spec: solver.node_limit must be a positive integer");
                else
                    spec.solver.node_limit = so["node_limit"].get<int64_t>();
            }
            if (so.contains("gap_tol")) {
                if (!so["gap_tol"].is_number() || so["gap_tol"].get<double>() < 0)
                    errors.push_back("spec: solver.gap_tol must be >= 0");
                else
                    spec.solver.gap_tol = so["gap_tol"].get<double>();
            }
        }
    }

    if (root.contains("output_dir")) {
        if (!root["output_dir"].is_string())
            errors.push_back("spec: output_dir must be a string");
        else
            spec.output_dir = root["output_dir"].get<std::string>();
    }

    if (errors.size() != initial_errors) return std::nullopt;
    return spec;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

// Applies one sweep override onto the raw config JSON; dotted keys descend
// into nested objects.
bool apply_override(std::string& config_text, const std::string& key, const std::string& raw,
                    std::vector<std::string>& errors) {
    json root = json::parse(config_text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        errors.push_back("config: not a JSON object");
        return false;
    }
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
        errors.push_back("sweep value is not valid JSON: " + raw);
        return false;
    }
    json* cur = &root;
    size_t pos = 0;
    while (true) {
        size_t dot = key.find('.', pos);
        std::string part = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (part.empty()) {
            errors.push_back("sweep key has an empty segment: " + key);
            return false;
        }
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            break;
        }
        cur = &(*cur)[part];
        if (!cur->is_object() && !cur->is_null()) {
            errors.push_back("sweep key does not name an object: " + key);
            return false;
        }
        pos = dot + 1;
    }
    config_text = root.dump();
    return true;
}

std::string display_value(const std::string& raw) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
        return raw.substr(1, raw.size() - 2);
    return raw;
}

struct RunStats {
    uint64_t seed = 0;
    std::string file;
    bool used_incumbent = false;
    int skipped_periods = 0;
    int64_t completed = 0;
    int64_t in_time = 0;
    double processed_rate = 0.0;
    double in_time_rate = 0.0;
    double tx_delay = 0.0;
    double cp_delay = 0.0;
    double total_delay = 0.0;
    double bytes_lte = 0.0;
    double bytes_v2v = 0.0;
};

// Sample mean and a 95% normal-approximation half-width; NaN entries are
// left out (runs with no completed tasks have no delay).
void mean_ci(const std::vector<double>& xs, double& mean, double& ci) {
    double sum = 0.0;
    int n = 0;
    for (double x : xs)
        if (!std::isnan(x)) {
            sum += x;
            ++n;
        }
    if (n == 0) {
        mean = std::nan("");
        ci = std::nan("");
        return;
    }
    mean = sum / n;
    if (n < 2) {
        ci = 0.0;
        return;
    }
    double ss = 0.0;
    for (double x : xs)
        if (!std::isnan(x)) ss += (x - mean) * (x - mean);
    double sd = std::sqrt(ss / (n - 1));
    ci = 1.96 * sd / std::sqrt(static_cast<double>(n));
}

}  // namespace

ExperimentResult execute(const ExperimentSpec& spec) {
    ExperimentResult out;

    std::string base_text;
    if (!spec.config_path.empty()) {
        auto text = io::read_file(spec.config_path, out.errors);
        if (!text) return out;
        base_text = *text;
    } else {
        base_text = spec.config_inline;
    }

    std::error_code ec;
    std::filesystem::create_directories(spec.output_dir, ec);
    if (ec) {
        out.errors.push_back("cannot create output dir " + spec.output_dir + ": " +
                             ec.message());
        return out;
    }

    std::vector<std::string> sweep_values = spec.sweep_values;
    if (spec.sweep_key.empty()) sweep_values = {""};

    // Every run of the grid, resolved up front so the runs themselves are
    // independent. Timelines live in the deque for stable addresses.
    struct Job {
        size_t sweep = 0;
        size_t policy = 0;
        uint64_t seed = 0;
        scenario::ScenarioConfig cfg;
        const scenario::TraceTimeline* timeline = nullptr;
        uint64_t run_seed = 0;
    };
    std::deque<scenario::TraceTimeline> timelines;
    std::map<std::pair<std::string, std::string>, const scenario::TraceTimeline*> trace_cache;
    std::vector<Job> jobs;

    for (size_t i = 0; i < sweep_values.size(); ++i) {
        std::string text = base_text;
        if (!spec.sweep_key.empty() &&
            !apply_override(text, spec.sweep_key, sweep_values[i], out.errors))
            return out;
        std::optional<scenario::ScenarioConfig> cfg0 = scenario::load_config_json(text, out.errors);
        if (!cfg0) return out;

        for (uint64_t seed : spec.seeds) {
            scenario::ScenarioConfig cfg = *cfg0;
            cfg.seed = seed;

            const scenario::TraceTimeline* timeline = nullptr;
            if (!cfg.trace_membership_csv.empty()) {
                auto key = std::make_pair(cfg.trace_membership_csv, cfg.trace_links_csv);
                auto it = trace_cache.find(key);
                if (it == trace_cache.end()) {
                    auto tl = scenario::load_timeline_csv(cfg.trace_membership_csv,
                                                          cfg.trace_links_csv, out.errors);
                    if (!tl) return out;
                    timelines.push_back(std::move(*tl));
                    it = trace_cache.emplace(key, &timelines.back()).first;
                }
                timeline = it->second;
            } else {
                timelines.push_back(scenario::synth_timeline(cfg, spec.duration_s));
                timeline = &timelines.back();
            }

            for (size_t pi = 0; pi < spec.policies.size(); ++pi) {
                Job job;
                job.sweep = i;
                job.policy = pi;
                job.seed = seed;
                job.cfg = cfg;
                job.timeline = timeline;
                job.run_seed = derive_seed(
                    seed, hash_str("run"), hash_str(assign::policy_name(spec.policies[pi])));
                jobs.push_back(std::move(job));
            }
        }
    }

    // Fan the independent runs out across a worker pool; results land in a
    // fixed slot per job, so output order and bytes match a sequential run.
    std::vector<SimRun> results(jobs.size());
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) {
            const Job& job = jobs[j];
            results[j] = run_simulation(job.cfg, *job.timeline, spec.policies[job.policy],
                                        spec.grid_size, spec.solver, spec.duration_s,
                                        job.run_seed);
        }
    };
    size_t pool_size = spec.pool_size;
    if (pool_size == 0) pool_size = std::max(1u, std::thread::hardware_concurrency());
    pool_size = std::min(pool_size, jobs.size());
    if (pool_size <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < pool_size; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }

    // (sweep index, policy) -> per-seed stats, collected in job order.
    std::map<std::pair<size_t, size_t>, std::vector<RunStats>> table;
    std::ostringstream runs_csv;
    runs_csv << kRunsCsvHeader << "\n";
    json issues = json::array();

    for (size_t j = 0; j < jobs.size(); ++j) {
        const Job& job = jobs[j];
        const SimRun& run = results[j];
        const char* policy = assign::policy_name(spec.policies[job.policy]);

        RunStats st;
        st.seed = job.seed;
        st.used_incumbent = run.used_incumbent;
        st.skipped_periods = run.skipped_periods;
        st.completed = run.completed();
        st.in_time = run.completed_in_time();
        st.processed_rate = run.processed_rate();
        st.in_time_rate = run.in_time_rate();
        st.tx_delay = run.mean_tx_delay_s();
        st.cp_delay = run.mean_compute_delay_s();
        st.total_delay = run.mean_total_delay_s();
        st.bytes_lte = run.total_bytes_lte();
        st.bytes_v2v = run.total_bytes_v2v();
        st.file = "run_sw" + std::to_string(job.sweep) + "_" + policy + "_seed" +
                  std::to_string(job.seed) + ".csv";

        std::string path = spec.output_dir + "/" + st.file;
        if (!io::write_file(path, sim::metrics_csv(run.periods), out.errors)) return out;
        out.files_written.push_back(path);

        if (!run.notes.empty()) {
            json notes = json::array();
            for (const std::string& n : run.notes) notes.push_back(n);
            issues.push_back({{"file", st.file}, {"notes", notes}});
        }

        runs_csv << spec.sweep_key << "," << display_value(sweep_values[job.sweep]) << ","
                 << policy << "," << job.seed << "," << st.file << ","
                 << (st.used_incumbent ? 1 : 0) << "," << st.skipped_periods << ","
                 << st.completed << "," << st.in_time << "," << num(st.processed_rate)
                 << "," << num(st.in_time_rate) << "," << num(st.total_delay) << "\n";
        table[{job.sweep, job.policy}].push_back(st);
    }

    std::ostringstream summary;
    summary << kSummaryCsvHeader << "\n";
    for (size_t i = 0; i < sweep_values.size(); ++i) {
        for (size_t pi = 0; pi < spec.policies.size(); ++pi) {
            const std::vector<RunStats>& runs = table[{i, pi}];
            auto column = [&](auto getter) {
                std::vector<double> xs;
                for (const RunStats& r : runs) xs.push_back(getter(r));
                return xs;
            };
            double m_rate, ci_rate, m_in, ci_in, m_tot, ci_tot, m_tx, ci_tx, m_cp, ci_cp;
            double m_bl, ci_bl, m_bv, ci_bv;
            mean_ci(column([](const RunStats& r) { return r.processed_rate; }), m_rate, ci_rate);
            mean_ci(column([](const RunStats& r) { return r.in_time_rate; }), m_in, ci_in);
            mean_ci(column([](const RunStats& r) { return r.total_delay; }), m_tot, ci_tot);
            mean_ci(column([](const RunStats& r) { return r.tx_delay; }), m_tx, ci_tx);
            mean_ci(column([](const RunStats& r) { return r.cp_delay; }), m_cp, ci_cp);
            mean_ci(column([](const RunStats& r) { return r.bytes_lte; }), m_bl, ci_bl);
            mean_ci(column([](const RunStats& r) { return r.bytes_v2v; }), m_bv, ci_bv);
            summary << spec.sweep_key << "," << display_value(sweep_values[i]) << ","
                    << assign::policy_name(spec.policies[pi]) << "," << runs.size() << ","
                    << num(m_rate) << "," << num(ci_rate) << "," << num(m_in) << ","
                    << num(ci_in) << "," << num(m_tot) << "," << num(ci_tot) << ","
                    << num(m_tx) << "," << num(m_cp) << "," << num(m_bl) << "," << num(m_bv)
                    << "\n";
        }
    }
    out.summary_csv = summary.str();

    if (!io::write_file(spec.output_dir + "/runs.csv", runs_csv.str(), out.errors)) return out;
    out.files_written.push_back(spec.output_dir + "/runs.csv");
    if (!io::write_file(spec.output_dir + "/summary.csv", out.summary_csv, out.errors))
        return out;
    out.files_written.push_back(spec.output_dir + "/summary.csv");

    json manifest;
    manifest["config"] = spec.config_path.empty()
                             ? json::parse(spec.config_inline, nullptr, false)
                             : json(spec.config_path);
    json policies = json::array();
    for (assign::Policy p : spec.policies) policies.push_back(assign::policy_name(p));
    manifest["policies"] = policies;
    if (!spec.sweep_key.empty()) {
        json values = json::array();
        for (const std::string& raw : spec.sweep_values)
            values.push_back(json::parse(raw, nullptr, false));
        manifest["sweep"] = {{"key", spec.sweep_key}, {"values", values}};
    }
    manifest["seeds"] = spec.seeds;
    manifest["duration_s"] = spec.duration_s;
    manifest["issues"] = issues;
    manifest["solver"] = {{"n_grid", spec.grid_size},
                          {"node_limit", spec.solver.node_limit},
                          {"gap_tol", spec.solver.gap_tol}};
    json files = json::array();
    for (const std::string& f : out.files_written) files.push_back(f);
    files.push_back(spec.output_dir + "/manifest.json");
    manifest["files"] = files;
    if (!io::write_file(spec.output_dir + "/manifest.json", manifest.dump(2) + "\n",
                        out.errors))
        return out;
    out.files_written.push_back(spec.output_dir + "/manifest.json");
    return out;
}

}  // namespace offloadsim::exp
