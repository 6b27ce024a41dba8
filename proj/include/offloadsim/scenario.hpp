#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "offloadsim/model.hpp"
#include "offloadsim/rng.hpp"

namespace offloadsim::scenario {

struct TaskProfile {
    std::string name = "image";
    double data_bits = 20.0 * 8000.0;   // d, config key in KB
    double compute_cycles = 1e9;        // c
    double max_delay_s = 0.6;           // tau
};

// All internal units are SI (Hz, bit/s, bits, seconds). The JSON schema keeps
// the table-style names and units: mu_c* in GHz, mu_r/sigma_r/u_* in Mb/s,
// d in KB (1 KB = 8000 bits), T and tau in seconds.
struct ScenarioConfig {
    double period_s = 1.0;          // T
    double sender_share = 0.2;      // eta_s
    double receiver_share = 0.2;    // eta_r
    double v2v_penetration = 1.0;   // share of non-sender/receiver cars with V2V

    double sender_hz = 1e9;    // mu_c1
    double regular_hz = 1e9;   // mu_c1 (same pool)
    double highend_hz = 5e9;   // mu_c2
    double highend_share = 0.3;
    double edge_hz = 10e9;     // mu_c3
    int edge_count = 1;

    double lte_mean_bps = 50e6;   // mu_r
    double lte_stddev_bps = 5e6;  // sigma_r
    double lte_floor_bps = 1e6;

    double cap_lte_bps = 24e6;  // u_lte
    double cap_v2v_bps = model::kInfiniteRate;  // u_v2v

    std::vector<TaskProfile> task_profiles = {TaskProfile{}};

    double microcloud_radius_m = 150.0;
    uint64_t seed = 1;

    // Step function sinr -> rate; sorted ascending by threshold.
    std::vector<std::pair<double, double>> sinr_map_db_bps;

    // Synthetic timeline knobs.
    int synth_initial_cars = 10;
    double synth_arrival_rate_per_s = 0.0;
    double synth_mean_dwell_s = 3600.0;
    double synth_sinr_at_1m_db = 55.0;
    double synth_pathloss_exp = 2.0;

    // Optional trace files; when set, `run` ingests them instead of synth.
    std::string trace_membership_csv;
    std::string trace_links_csv;
};

ScenarioConfig default_config();

// Parses the JSON schema described above; returns the config or fills
// `errors`. Unknown keys are reported, not ignored.
std::optional<ScenarioConfig> load_config_json(const std::string& text,
                                               std::vector<std::string>& errors);
std::string config_to_json(const ScenarioConfig& cfg);

struct Member {
    std::string id;
    int v2v_capable = -1;  // -1: unknown, decided by the penetration draw
};

struct PairLink {
    std::string src, dst;
    bool has_rate = false;    // schema B row: direct rate and medium
    double rate_bps = 0.0;
    model::Medium medium = model::Medium::None;
    double sinr_db = 0.0;     // schema A row
};

struct Snapshot {
    double time_s = 0.0;
    std::vector<Member> members;
    std::vector<PairLink> links;
};

struct TraceTimeline {
    std::vector<Snapshot> snapshots;  // nondecreasing time
    // Latest snapshot with time <= t; nullptr when the timeline is empty.
    const Snapshot* at(double t) const;
};

// Largest rate whose threshold is <= sinr; 0 below the lowest threshold.
double sinr_to_rate(double sinr_db, const std::vector<std::pair<double, double>>& table);

// One truncated Gaussian draw N(mu_r, sigma_r), clamped below at the floor.
double sample_lte_rate(const ScenarioConfig& cfg, Rng& rng);

// Sticky role assignment across periods: cars keep sender/receiver roles
// while continuously present; share targets round(eta * n) are enforced each
// snapshot by promoting/demoting in priority order (stable per-car hashes).
class RoleTracker {
public:
    struct CarRoles {
        bool sender = false;
        bool receiver = false;
    };
    void update(const std::vector<std::string>& present_ids, double sender_share,
                double receiver_share, uint64_t seed);
    const CarRoles* roles_of(const std::string& id) const;

private:
    std::map<std::string, CarRoles> roles_;
    std::map<std::string, uint64_t> priority_;
};

// Builds the per-period Instance at time t: roles via the tracker, capability
// via per-car penetration draws (senders/receivers always capable), compute
// powers from the mixture, V2V rates from SINR or direct-rate links, LTE
// rates sampled per (car, edge, period), one task type per sender.
model::Instance snapshot_instance(const TraceTimeline& timeline, double t,
                                  const ScenarioConfig& cfg, RoleTracker& roles);

// Synthetic membership/SINR generator: Poisson arrivals, exponential dwell,
// static uniform placement in the disk, log-distance path loss.
TraceTimeline synth_timeline(const ScenarioConfig& cfg, double duration_s);

// CSV ingestion. Membership: time_s,car_id,present,v2v_capable. Links are
// either schema A (time_s,src_id,dst_id,sinr_db) or schema B
// (time_s,src_id,dst_id,rate_bps,medium), detected by header.
std::optional<TraceTimeline> load_timeline_csv(const std::string& membership_csv,
                                               const std::string& links_csv,
                                               std::vector<std::string>& errors);

}  // namespace offloadsim::scenario
