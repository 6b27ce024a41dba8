#include "offloadsim/instance_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace offloadsim::io {

using nlohmann::json;

std::optional<std::string> read_file(const std::string& path, std::vector<std::string>& errors) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        errors.push_back("cannot open " + path);
        return std::nullopt;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool write_file(const std::string& path, const std::string& content,
                std::vector<std::string>& errors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        errors.push_back("cannot open " + path + " for writing");
        return false;
    }
    out << content;
    out.flush();
    if (!out) {
        errors.push_back("write failed for " + path);
        return false;
    }
    return true;
}

namespace {

json cap_to_json(double v) {
    if (std::isinf(v)) return json("inf");
    return json(v);
}

bool cap_from_json(const json& v, double& out, const char* key,
                   std::vector<std::string>& errors) {
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") {
            out = model::kInfiniteRate;
            return true;
        }
        errors.push_back(std::string(key) + ": only \"inf\" is accepted as a string");
        return false;
    }
    if (!v.is_number()) {
        errors.push_back(std::string(key) + ": expected a number or \"inf\"");
        return false;
    }
    out = v.get<double>();
    return true;
}

}  // namespace

std::optional<model::Instance> load_instance_json(const std::string& text,
                                                  std::vector<std::string>& errors) {
    size_t initial_errors = errors.size();
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        errors.push_back("instance: not a JSON object");
        return std::nullopt;
    }

    model::Instance ins;
    if (root.contains("period_s") && root["period_s"].is_number())
        ins.period_s = root["period_s"].get<double>();
    else
        errors.push_back("instance: period_s missing or not a number");
    if (root.contains("cap_lte_bps")) cap_from_json(root["cap_lte_bps"], ins.cap_lte_bps,
                                                    "cap_lte_bps", errors);
    if (root.contains("cap_v2v_bps")) cap_from_json(root["cap_v2v_bps"], ins.cap_v2v_bps,
                                                    "cap_v2v_bps", errors);

    if (!root.contains("nodes") || !root["nodes"].is_array()) {
        errors.push_back("instance: nodes array missing");
        return std::nullopt;
    }
    for (const json& jn : root["nodes"]) {
        model::Node n;
        if (!jn.is_object() || !jn.contains("id") || !jn["id"].is_string()) {
            errors.push_back("nodes: each entry needs a string id");
            continue;
        }
        n.id = jn["id"].get<std::string>();
        std::string kind = jn.value("kind", "car");
        if (kind == "car")
            n.kind = model::NodeKind::Car;
        else if (kind == "edge")
            n.kind = model::NodeKind::EdgeServer;
        else
            errors.push_back("node " + n.id + ": kind must be car or edge");
        n.compute_hz = jn.value("compute_hz", 0.0);
        n.v2v_capable = jn.value("v2v_capable", false);
        if (jn.contains("roles")) {
            if (!jn["roles"].is_array()) {
                errors.push_back("node " + n.id + ": roles must be an array");
            } else {
                for (const json& jr : jn["roles"]) {
                    std::string r = jr.is_string() ? jr.get<std::string>() : "";
                    if (r == "sender")
                        n.add_role(model::Role::Sender);
                    else if (r == "receiver")
                        n.add_role(model::Role::Receiver);
                    else if (r == "worker")
                        n.add_role(model::Role::Worker);
                    else
                        errors.push_back("node " + n.id + ": unknown role \"" + r + "\"");
                }
            }
        }
        ins.nodes.push_back(n);
    }

    std::vector<model::RawRate> raw;
    if (root.contains("links")) {
        if (!root["links"].is_array()) {
            errors.push_back("instance: links must be an array");
        } else {
            for (const json& jl : root["links"]) {
                if (!jl.is_object() || !jl.contains("src") || !jl.contains("dst") ||
                    !jl.contains("rate_bps") || !jl["src"].is_string() ||
                    !jl["dst"].is_string() || !jl["rate_bps"].is_number()) {
                    errors.push_back("links: each entry needs src, dst, rate_bps");
                    continue;
                }
                raw.push_back({jl["src"].get<std::string>(), jl["dst"].get<std::string>(),
                               jl["rate_bps"].get<double>()});
            }
        }
    }

    if (root.contains("task_types")) {
        if (!root["task_types"].is_array()) {
            errors.push_back("instance: task_types must be an array");
        } else {
            for (const json& jt : root["task_types"]) {
                if (!jt.is_object()) {
                    errors.push_back("task_types: each entry must be an object");
                    continue;
                }
                model::TaskType tt;
                tt.id = jt.value("id", "");
                tt.data_bits = jt.value("data_bits", 0.0);
                tt.compute_cycles = jt.value("compute_cycles", 0.0);
                tt.max_delay_s = jt.value("max_delay_s", 0.0);
                std::string sender = jt.value("sender", "");
                tt.sender = ins.node_index(sender);
                if (tt.sender < 0)
                    errors.push_back("task type " + tt.id + ": unknown sender \"" + sender + "\"");
                if (jt.contains("receivers") && jt["receivers"].is_array()) {
                    for (const json& jr : jt["receivers"]) {
                        std::string id = jr.is_string() ? jr.get<std::string>() : "";
                        int idx = ins.node_index(id);
                        if (idx < 0)
                            errors.push_back("task type " + tt.id + ": unknown receiver \"" +
                                             id + "\"");
                        else
                            tt.receivers.push_back(idx);
                    }
                } else {
                    errors.push_back("task type " + tt.id + ": receivers array missing");
                }
                ins.task_types.push_back(tt);
            }
        }
    }

    auto table = model::build_link_table(ins.nodes, raw, errors);
    if (table) ins.links = *table;

    if (errors.size() != initial_errors) return std::nullopt;
    std::vector<std::string> v = model::validate_instance(ins);
    if (!v.empty()) {
        for (std::string& msg : v) errors.push_back("instance: " + msg);
        return std::nullopt;
    }
    return ins;
}

std::string instance_to_json(const model::Instance& ins) {
    json root;
    root["period_s"] = ins.period_s;
    root["cap_lte_bps"] = cap_to_json(ins.cap_lte_bps);
    root["cap_v2v_bps"] = cap_to_json(ins.cap_v2v_bps);

    json nodes = json::array();
    for (const model::Node& n : ins.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = n.kind == model::NodeKind::Car ? "car" : "edge";
        jn["compute_hz"] = n.compute_hz;
        jn["v2v_capable"] = n.v2v_capable;
        json roles = json::array();
        if (n.has_role(model::Role::Sender)) roles.push_back("sender");
        if (n.has_role(model::Role::Receiver)) roles.push_back("receiver");
        if (n.has_role(model::Role::Worker)) roles.push_back("worker");
        jn["roles"] = roles;
        nodes.push_back(jn);
    }
    root["nodes"] = nodes;

    json links = json::array();
    const int n = static_cast<int>(ins.nodes.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j || ins.links.rate(i, j) <= 0) continue;
            links.push_back({{"src", ins.nodes[i].id},
                             {"dst", ins.nodes[j].id},
                             {"rate_bps", ins.links.rate(i, j)}});
        }
    }
    root["links"] = links;

    json tts = json::array();
    for (const model::TaskType& tt : ins.task_types) {
        json jt;
        jt["id"] = tt.id;
        jt["data_bits"] = tt.data_bits;
        jt["compute_cycles"] = tt.compute_cycles;
        jt["max_delay_s"] = tt.max_delay_s;
        jt["sender"] = ins.nodes[tt.sender].id;
        json rec = json::array();
        for (int r : tt.receivers) rec.push_back(ins.nodes[r].id);
        jt["receivers"] = rec;
        tts.push_back(jt);
    }
    root["task_types"] = tts;
    return root.dump(2) + "\n";
}

std::optional<assign::Assignment> load_assignment_json(const std::string& text,
                                                       const model::Instance& ins,
                                                       std::vector<std::string>& errors) {
    size_t initial_errors = errors.size();
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
        errors.push_back("assignment: not a JSON object");
        return std::nullopt;
    }

    std::vector<int> workers = ins.workers();
    if (!root.contains("workers") || !root["workers"].is_array() ||
        root["workers"].size() != workers.size()) {
        errors.push_back("assignment: workers list missing or wrong length");
        return std::nullopt;
    }
    for (size_t w = 0; w < workers.size(); ++w) {
        const json& jw = root["workers"][w];
        if (!jw.is_string() || jw.get<std::string>() != ins.nodes[workers[w]].id) {
            errors.push_back("assignment: worker axis mismatch at position " +
                             std::to_string(w));
            return std::nullopt;
        }
    }
    if (!root.contains("task_types") || !root["task_types"].is_array() ||
        root["task_types"].size() != ins.task_types.size()) {
        errors.push_back("assignment: task_types list missing or wrong length");
        return std::nullopt;
    }
    for (size_t k = 0; k < ins.task_types.size(); ++k) {
        const json& jk = root["task_types"][k];
        if (!jk.is_string() || jk.get<std::string>() != ins.task_types[k].id) {
            errors.push_back("assignment: task type axis mismatch at position " +
                             std::to_string(k));
            return std::nullopt;
        }
    }

    assign::Assignment a;
    a.resize(static_cast<int>(ins.task_types.size()), static_cast<int>(workers.size()));

    auto load_matrix = [&](const char* key, auto& mat, auto cast) {
        if (!root.contains(key) || !root[key].is_array() ||
            root[key].size() != static_cast<size_t>(a.num_task_types)) {
            errors.push_back(std::string("assignment: ") + key + " matrix missing or wrong rows");
            return;
        }
        for (int k = 0; k < a.num_task_types; ++k) {
            const json& row = root[key][k];
            if (!row.is_array() || row.size() != static_cast<size_t>(a.num_workers)) {
                errors.push_back(std::string("assignment: ") + key + " row " +
                                 std::to_string(k) + " has wrong length");
                continue;
            }
            for (int w = 0; w < a.num_workers; ++w) {
                if (!row[w].is_number()) {
                    errors.push_back(std::string("assignment: ") + key + "[" +
                                     std::to_string(k) + "][" + std::to_string(w) +
                                     "] is not a number");
                    continue;
                }
                mat[k][w] = cast(row[w]);
            }
        }
    };
    load_matrix("x", a.x, [](const json& v) { return v.get<double>(); });
    load_matrix("y_lte", a.y_lte, [](const json& v) { return v.get<double>(); });
    load_matrix("y_v2v", a.y_v2v, [](const json& v) { return v.get<double>(); });
    load_matrix("m", a.m, [](const json& v) { return v.get<int64_t>(); });

    for (int k = 0; k < a.num_task_types; ++k) {
        a.l[k] = 0;
        for (int w = 0; w < a.num_workers; ++w) a.l[k] += a.m[k][w];
    }

    if (errors.size() != initial_errors) return std::nullopt;
    return a;
}

std::string assignment_to_json(const assign::Assignment& a, const model::Instance& ins) {
    json root;
    json workers = json::array();
    for (int w : ins.workers()) workers.push_back(ins.nodes[w].id);
    root["workers"] = workers;
    json tts = json::array();
    for (const model::TaskType& tt : ins.task_types) tts.push_back(tt.id);
    root["task_types"] = tts;
    root["x"] = a.x;
    root["y_lte"] = a.y_lte;
    root["y_v2v"] = a.y_v2v;
    root["m"] = a.m;
    root["l"] = a.l;
    return root.dump(2) + "\n";
}

}  // namespace offloadsim::io
