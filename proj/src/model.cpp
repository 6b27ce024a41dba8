#include "offloadsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace offloadsim::model {

const char* medium_name(Medium m) {
    switch (m) {
        case Medium::None: return "none";
        case Medium::LTE: return "lte";
        case Medium::V2V: return "v2v";
        case Medium::Self: return "self";
    }
    return "?";
}

int Instance::node_index(const std::string& id) const {
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<int> Instance::workers() const {
    std::vector<int> w;
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].has_role(Role::Worker)) w.push_back(static_cast<int>(i));
    return w;
}

std::vector<int> Instance::senders() const {
    std::vector<int> s;
    for (size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].has_role(Role::Sender)) s.push_back(static_cast<int>(i));
    return s;
}

namespace {

// Infeasible pairings get Medium::None; the caller decides whether a supplied
// rate on such a pair is an error.
Medium derive_medium(const Node& a, const Node& b) {
    bool a_edge = a.kind == NodeKind::EdgeServer;
    bool b_edge = b.kind == NodeKind::EdgeServer;
    if (a_edge != b_edge) return Medium::LTE;
    if (a_edge && b_edge) return Medium::None;
    if (a.v2v_capable && b.v2v_capable) return Medium::V2V;
    return Medium::None;
}

}  // namespace

std::optional<LinkTable> build_link_table(const std::vector<Node>& nodes,
                                          const std::vector<RawRate>& raw_rates,
                                          std::vector<std::string>& errors) {
    const int n = static_cast<int>(nodes.size());
    LinkTable t;
    t.n = n;
    t.rate_bps.assign(static_cast<size_t>(n) * n, 0.0);
    t.medium.assign(static_cast<size_t>(n) * n, Medium::None);
    for (int i = 0; i < n; ++i) t.medium[static_cast<size_t>(i) * n + i] = Medium::Self;

    auto index_of = [&](const std::string& id) {
        for (int i = 0; i < n; ++i)
            if (nodes[i].id == id) return i;
        return -1;
    };

    size_t initial_errors = errors.size();
    for (const RawRate& r : raw_rates) {
        int src = index_of(r.src);
        int dst = index_of(r.dst);
        if (src < 0 || dst < 0) {
            errors.push_back("link " + r.src + "->" + r.dst + ": unknown node id");
            continue;
        }
        if (src == dst) {
            errors.push_back("link " + r.src + "->" + r.dst + ": self links carry no rate");
            continue;
        }
        if (r.rate_bps < 0) {
            errors.push_back("link " + r.src + "->" + r.dst + ": negative rate");
            continue;
        }
        if (r.rate_bps == 0.0) continue;  // treated as unlisted
        Medium m = derive_medium(nodes[src], nodes[dst]);
        if (m == Medium::None) {
            errors.push_back("link " + r.src + "->" + r.dst +
                             ": impossible pair (no shared medium)");
            continue;
        }
        t.rate_bps[static_cast<size_t>(src) * n + dst] = r.rate_bps;
        t.medium[static_cast<size_t>(src) * n + dst] = m;
    }
    if (errors.size() != initial_errors) return std::nullopt;
    return t;
}

std::vector<std::string> validate_instance(const Instance& inst) {
    std::vector<std::string> v;
    const int n = static_cast<int>(inst.nodes.size());

    std::set<std::string> seen_ids;
    for (const Node& nd : inst.nodes) {
        if (nd.id.empty()) v.push_back("node with empty id");
        if (!seen_ids.insert(nd.id).second) v.push_back("duplicate node id " + nd.id);
        if (nd.has_role(Role::Worker) && !(nd.compute_hz > 0))
            v.push_back("node " + nd.id + ": worker must have compute_hz > 0");
        if (nd.kind == NodeKind::EdgeServer) {
            if (nd.v2v_capable) v.push_back("node " + nd.id + ": edge server cannot be v2v_capable");
            if (!nd.has_role(Role::Worker))
                v.push_back("node " + nd.id + ": edge server must be worker-eligible");
        }
        if (!std::isfinite(nd.compute_hz) || nd.compute_hz < 0)
            v.push_back("node " + nd.id + ": compute_hz must be finite and >= 0");
    }

    if (inst.links.n != n) {
        v.push_back("link table size does not match node count");
        return v;  // indexing below would be unsafe
    }

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Medium m = inst.links.med(i, j);
            double r = inst.links.rate(i, j);
            const Node& a = inst.nodes[i];
            const Node& b = inst.nodes[j];
            if (i == j) {
                if (m != Medium::Self || r != 0.0)
                    v.push_back("node " + a.id + ": self link must have medium self and no rate");
                continue;
            }
            bool a_edge = a.kind == NodeKind::EdgeServer;
            bool b_edge = b.kind == NodeKind::EdgeServer;
            if (m == Medium::LTE && !(a_edge != b_edge))
                v.push_back("pair " + a.id + "->" + b.id + ": LTE requires exactly one edge server");
            if (m == Medium::V2V && !(!a_edge && !b_edge && a.v2v_capable && b.v2v_capable))
                v.push_back("pair " + a.id + "->" + b.id + ": V2V requires two v2v-capable cars");
            if (m == Medium::Self)
                v.push_back("pair " + a.id + "->" + b.id + ": self medium on distinct nodes");
            if (r < 0) v.push_back("pair " + a.id + "->" + b.id + ": negative rate");
            if ((r > 0) != (m == Medium::LTE || m == Medium::V2V))
                v.push_back("pair " + a.id + "->" + b.id +
                            ": rate must be positive exactly when medium is lte/v2v");
        }
    }

    for (const TaskType& tt : inst.task_types) {
        if (!(tt.data_bits > 0)) v.push_back("task type " + tt.id + ": data_bits must be positive");
        if (!(tt.compute_cycles > 0))
            v.push_back("task type " + tt.id + ": compute_cycles must be positive");
        if (!(tt.max_delay_s > 0))
            v.push_back("task type " + tt.id + ": max_delay_s must be positive");
        if (tt.sender < 0 || tt.sender >= n) {
            v.push_back("task type " + tt.id + ": sender not in node list");
        } else if (!inst.nodes[tt.sender].has_role(Role::Sender)) {
            v.push_back("task type " + tt.id + ": sender node lacks the sender role");
        }
        if (tt.receivers.empty()) v.push_back("task type " + tt.id + ": receivers must be non-empty");
        std::set<int> uniq;
        for (int r : tt.receivers) {
            if (r < 0 || r >= n)
                v.push_back("task type " + tt.id + ": receiver index out of range");
            else if (!uniq.insert(r).second)
                v.push_back("task type " + tt.id + ": duplicate receiver");
        }
    }

    if (inst.workers().empty()) v.push_back("instance has no workers");
    if (!(inst.period_s > 0)) v.push_back("period_s must be positive");
    if (inst.cap_lte_bps < 0 || inst.cap_v2v_bps < 0) v.push_back("caps must be non-negative");
    return v;
}

}  // namespace offloadsim::model
