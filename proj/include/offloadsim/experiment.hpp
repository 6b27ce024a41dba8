#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "offloadsim/assignment.hpp"
#include "offloadsim/scenario.hpp"
#include "offloadsim/simulator.hpp"

namespace offloadsim::exp {

// One simulated run: a fixed scenario seed, one policy, every period of the
// timeline in sequence with carryover and sticky roles.
struct SimRun {
    std::vector<sim::PeriodMetrics> periods;
    bool used_incumbent = false;   // some period took a node-limited incumbent
    int skipped_periods = 0;       // periods with no usable instance/assignment
    std::vector<std::string> notes;

    int64_t completed() const;
    int64_t completed_in_time() const;
    // Tasks per second per sender over the whole run.
    double processed_rate() const;
    double in_time_rate() const;
    // Mean per-task delays over completed tasks.
    double mean_tx_delay_s() const;
    double mean_compute_delay_s() const;
    double mean_total_delay_s() const;
    double total_bytes_lte() const;
    double total_bytes_v2v() const;
};

SimRun run_simulation(const scenario::ScenarioConfig& cfg, const scenario::TraceTimeline& timeline,
                      assign::Policy policy, int grid_size, const milp::SolveOptions& solver,
                      double duration_s, uint64_t run_seed);

// Experiment description: scenario config (path or inline JSON), policy list,
// optional single-key sweep (dotted paths reach nested config keys), seeds,
// duration, solver knobs, output directory.
struct ExperimentSpec {
    std::string config_path;      // one of config_path / config_inline is set
    std::string config_inline;    // raw JSON text
    std::vector<assign::Policy> policies;
    std::string sweep_key;                  // empty: no sweep
    std::vector<std::string> sweep_values;  // raw JSON scalars, e.g. "0.5" or "\"inf\""
    std::vector<uint64_t> seeds;
    double duration_s = 10.0;
    int grid_size = 5;
    milp::SolveOptions solver;
    std::string output_dir = "out";
    size_t pool_size = 0;  // worker threads for the runs; 0 picks the hardware count
};

std::optional<ExperimentSpec> load_spec_json(const std::string& text,
                                             std::vector<std::string>& errors);

struct ExperimentResult {
    std::vector<std::string> files_written;
    std::string summary_csv;  // contents of summary.csv
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

// Runs the full experiment grid (sweep value x policy x seed). Runs are
// independent and fan out across a worker pool; all file writes happen
// afterwards in grid order, so output bytes depend only on the spec. Writes
// one metrics CSV per run plus runs.csv, summary.csv and manifest.json into
// output_dir. Runs that dropped periods are listed under "issues" in the
// manifest with the per-period reasons; the other runs are unaffected.
ExperimentResult execute(const ExperimentSpec& spec);

extern const char* kSummaryCsvHeader;
extern const char* kRunsCsvHeader;

}  // namespace offloadsim::exp
