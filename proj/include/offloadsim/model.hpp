#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace offloadsim::model {

constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

enum class NodeKind { Car, EdgeServer };

enum class Role : unsigned { Sender = 1u << 0, Receiver = 1u << 1, Worker = 1u << 2 };

inline unsigned role_bit(Role r) { return static_cast<unsigned>(r); }

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Car;
    double compute_hz = 0.0;  // F_i, cycles/second
    bool v2v_capable = false;
    unsigned roles = 0;  // bitmask of Role

    bool has_role(Role r) const { return (roles & role_bit(r)) != 0; }
    void add_role(Role r) { roles |= role_bit(r); }
};

enum class Medium { None, LTE, V2V, Self };

const char* medium_name(Medium m);

// Directional rate table over node indices. Medium is derived from node
// kinds and V2V capability; a pair carries a positive rate iff its medium
// is LTE or V2V.
struct LinkTable {
    int n = 0;
    std::vector<double> rate_bps;  // n*n, row-major, [src*n + dst]
    std::vector<Medium> medium;    // n*n

    double rate(int src, int dst) const { return rate_bps[static_cast<size_t>(src) * n + dst]; }
    Medium med(int src, int dst) const { return medium[static_cast<size_t>(src) * n + dst]; }
};

struct TaskType {
    std::string id;
    double data_bits = 0.0;       // d_k
    double compute_cycles = 0.0;  // c_k
    int sender = -1;              // node index, s_k
    std::vector<int> receivers;   // node indices, R_k
    double max_delay_s = 0.0;     // tau_k
};

// One frame of a task type within a period.
struct Task {
    int type = -1;       // index into Instance::task_types
    int index = -1;      // l
    double arrival_s = 0.0;  // t_l, relative to period start
};

struct Instance {
    std::vector<Node> nodes;
    LinkTable links;
    std::vector<TaskType> task_types;
    double period_s = 1.0;  // T
    double cap_lte_bps = kInfiniteRate;  // U^LTE
    double cap_v2v_bps = kInfiniteRate;  // U^V2V

    int node_index(const std::string& id) const;
    std::vector<int> workers() const;    // W
    std::vector<int> senders() const;    // S (distinct sender nodes)
    int sender_count() const { return static_cast<int>(senders().size()); }
};

struct RawRate {
    std::string src;
    std::string dst;
    double rate_bps = 0.0;
};

// Derives the medium of every pair from node kinds/capabilities and fills in
// the supplied directional rates. A positive rate on an impossible pair (two
// edge servers, or a car pair where either side lacks V2V) is an error.
// Returns the table or appends human-readable violations to `errors`.
std::optional<LinkTable> build_link_table(const std::vector<Node>& nodes,
                                          const std::vector<RawRate>& raw_rates,
                                          std::vector<std::string>& errors);

// Checks every type invariant; returns the list of violations (empty = valid).
std::vector<std::string> validate_instance(const Instance& instance);

}  // namespace offloadsim::model
