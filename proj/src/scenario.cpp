#include "offloadsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace offloadsim::scenario {

using nlohmann::json;

namespace {

constexpr double kMbps = 1e6;
constexpr double kGHz = 1e9;
constexpr double kBitsPerKB = 8000.0;

}  // namespace

ScenarioConfig default_config() {
    ScenarioConfig cfg;
    // DSRC-style MCS ladder, thresholds in dB, rates in bit/s.
    cfg.sinr_map_db_bps = {{5.0, 3e6},  {6.0, 4.5e6}, {8.0, 6e6},  {11.0, 9e6},
                           {15.0, 12e6}, {20.0, 18e6}, {25.0, 24e6}, {30.0, 27e6}};
    return cfg;
}

double sinr_to_rate(double sinr_db, const std::vector<std::pair<double, double>>& table) {
    double best_threshold = -std::numeric_limits<double>::infinity();
    double rate = 0.0;
    for (const auto& [threshold_db, rate_bps] : table) {
        if (threshold_db <= sinr_db && threshold_db > best_threshold) {
            best_threshold = threshold_db;
            rate = rate_bps;
        }
    }
    return rate;
}

double sample_lte_rate(const ScenarioConfig& cfg, Rng& rng) {
    double r = rng.gaussian(cfg.lte_mean_bps, cfg.lte_stddev_bps);
    return std::max(r, cfg.lte_floor_bps);
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

// Pulls a numeric field, reporting type errors instead of throwing.
bool read_num(const json& obj, const char* key, double& out, double scale,
              std::vector<std::string>& errors) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number()) {
        errors.push_back(std::string(key) + ": expected a number");
        return false;
    }
    out = v.get<double>() * scale;
    return true;
}

bool read_int(const json& obj, const char* key, int& out, std::vector<std::string>& errors) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        errors.push_back(std::string(key) + ": expected an integer");
        return false;
    }
    out = v.get<int>();
    return true;
}

// u_lte / u_v2v accept a number in Mb/s or the string "inf".
bool read_cap(const json& obj, const char* key, double& out, std::vector<std::string>& errors) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") {
            out = model::kInfiniteRate;
            return true;
        }
        errors.push_back(std::string(key) + ": only \"inf\" is accepted as a string value");
        return false;
    }
    if (!v.is_number()) {
        errors.push_back(std::string(key) + ": expected a number or \"inf\"");
        return false;
    }
    out = v.get<double>() * kMbps;
    return true;
}

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> known,
                std::vector<std::string>& errors) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) errors.push_back(std::string(where) + ": unknown key \"" + it.key() + "\"");
    }
}

}  // namespace

std::optional<ScenarioConfig> load_config_json(const std::string& text,
                                               std::vector<std::string>& errors) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded()) {
        errors.push_back("config: not valid JSON");
        return std::nullopt;
    }
    if (!root.is_object()) {
        errors.push_back("config: top level must be an object");
        return std::nullopt;
    }

    ScenarioConfig cfg = default_config();
    size_t initial_errors = errors.size();

    check_keys(root, "config",
               {"T", "eta_s", "eta_r", "v2v_penetration", "compute_mix", "lte_rate", "caps",
                "task_profiles", "microcloud_radius_m", "seed", "sinr_map", "synth", "trace"},
               errors);

    read_num(root, "T", cfg.period_s, 1.0, errors);
    read_num(root, "eta_s", cfg.sender_share, 1.0, errors);
    read_num(root, "eta_r", cfg.receiver_share, 1.0, errors);
    read_num(root, "v2v_penetration", cfg.v2v_penetration, 1.0, errors);
    read_num(root, "microcloud_radius_m", cfg.microcloud_radius_m, 1.0, errors);
    if (root.contains("seed")) {
        const json& v = root.at("seed");
        if (v.is_number_unsigned() || v.is_number_integer())
            cfg.seed = v.get<uint64_t>();
        else
            errors.push_back("seed: expected an integer");
    }

    if (root.contains("compute_mix")) {
        const json& cm = root.at("compute_mix");
        if (!cm.is_object()) {
            errors.push_back("compute_mix: expected an object");
        } else {
            check_keys(cm, "compute_mix", {"mu_c1", "mu_c2", "mu_c3", "highend_share", "edge_count"},
                       errors);
            if (read_num(cm, "mu_c1", cfg.regular_hz, kGHz, errors)) cfg.sender_hz = cfg.regular_hz;
            read_num(cm, "mu_c2", cfg.highend_hz, kGHz, errors);
            read_num(cm, "mu_c3", cfg.edge_hz, kGHz, errors);
            read_num(cm, "highend_share", cfg.highend_share, 1.0, errors);
            read_int(cm, "edge_count", cfg.edge_count, errors);
        }
    }

    if (root.contains("lte_rate")) {
        const json& lr = root.at("lte_rate");
        if (!lr.is_object()) {
            errors.push_back("lte_rate: expected an object");
        } else {
            check_keys(lr, "lte_rate", {"mu_r", "sigma_r", "floor"}, errors);
            read_num(lr, "mu_r", cfg.lte_mean_bps, kMbps, errors);
            read_num(lr, "sigma_r", cfg.lte_stddev_bps, kMbps, errors);
            read_num(lr, "floor", cfg.lte_floor_bps, kMbps, errors);
        }
    }

    if (root.contains("caps")) {
        const json& cp = root.at("caps");
        if (!cp.is_object()) {
            errors.push_back("caps: expected an object");
        } else {
            check_keys(cp, "caps", {"u_lte", "u_v2v"}, errors);
            read_cap(cp, "u_lte", cfg.cap_lte_bps, errors);
            read_cap(cp, "u_v2v", cfg.cap_v2v_bps, errors);
        }
    }

    if (root.contains("task_profiles")) {
        const json& tp = root.at("task_profiles");
        if (!tp.is_array() || tp.empty()) {
            errors.push_back("task_profiles: expected a non-empty array");
        } else {
            cfg.task_profiles.clear();
            for (size_t i = 0; i < tp.size(); ++i) {
                const json& p = tp[i];
                std::string where = "task_profiles[" + std::to_string(i) + "]";
                if (!p.is_object()) {
                    errors.push_back(where + ": expected an object");
                    continue;
                }
                check_keys(p, where.c_str(), {"name", "d", "c", "tau"}, errors);
                TaskProfile prof;
                if (p.contains("name")) {
                    if (p.at("name").is_string())
                        prof.name = p.at("name").get<std::string>();
                    else
                        errors.push_back(where + ".name: expected a string");
                }
                read_num(p, "d", prof.data_bits, kBitsPerKB, errors);
                read_num(p, "c", prof.compute_cycles, 1.0, errors);
                read_num(p, "tau", prof.max_delay_s, 1.0, errors);
                cfg.task_profiles.push_back(prof);
            }
        }
    }

    if (root.contains("sinr_map")) {
        const json& sm = root.at("sinr_map");
        if (!sm.is_array()) {
            errors.push_back("sinr_map: expected an array of [threshold_db, rate_mbps] pairs");
        } else {
            cfg.sinr_map_db_bps.clear();
            for (const json& row : sm) {
                if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
                    !row[1].is_number()) {
                    errors.push_back("sinr_map: each entry must be [threshold_db, rate_mbps]");
                    continue;
                }
                cfg.sinr_map_db_bps.emplace_back(row[0].get<double>(),
                                                 row[1].get<double>() * kMbps);
            }
            std::sort(cfg.sinr_map_db_bps.begin(), cfg.sinr_map_db_bps.end());
        }
    }

    if (root.contains("synth")) {
        const json& sy = root.at("synth");
        if (!sy.is_object()) {
            errors.push_back("synth: expected an object");
        } else {
            check_keys(sy, "synth",
                       {"initial_cars", "arrival_rate_per_s", "mean_dwell_s", "sinr_at_1m_db",
                        "pathloss_exp"},
                       errors);
            read_int(sy, "initial_cars", cfg.synth_initial_cars, errors);
            read_num(sy, "arrival_rate_per_s", cfg.synth_arrival_rate_per_s, 1.0, errors);
            read_num(sy, "mean_dwell_s", cfg.synth_mean_dwell_s, 1.0, errors);
            read_num(sy, "sinr_at_1m_db", cfg.synth_sinr_at_1m_db, 1.0, errors);
            read_num(sy, "pathloss_exp", cfg.synth_pathloss_exp, 1.0, errors);
        }
    }

    if (root.contains("trace")) {
        const json& tr = root.at("trace");
        if (!tr.is_object()) {
            errors.push_back("trace: expected an object");
        } else {
            check_keys(tr, "trace", {"membership_csv", "links_csv"}, errors);
            if (tr.contains("membership_csv")) {
                if (tr.at("membership_csv").is_string())
                    cfg.trace_membership_csv = tr.at("membership_csv").get<std::string>();
                else
                    errors.push_back("trace.membership_csv: expected a string");
            }
            if (tr.contains("links_csv")) {
                if (tr.at("links_csv").is_string())
                    cfg.trace_links_csv = tr.at("links_csv").get<std::string>();
                else
                    errors.push_back("trace.links_csv: expected a string");
            }
        }
    }

    // Range checks on the assembled config.
    auto in_unit = [&](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) errors.push_back(std::string(name) + ": must be in [0, 1]");
    };
    if (!(cfg.period_s > 0)) errors.push_back("T: must be positive");
    in_unit(cfg.sender_share, "eta_s");
    in_unit(cfg.receiver_share, "eta_r");
    in_unit(cfg.v2v_penetration, "v2v_penetration");
    in_unit(cfg.highend_share, "compute_mix.highend_share");
    if (cfg.edge_count < 0) errors.push_back("compute_mix.edge_count: must be >= 0");
    if (!(cfg.lte_stddev_bps >= 0)) errors.push_back("lte_rate.sigma_r: must be >= 0");
    if (!(cfg.cap_lte_bps >= 0) || !(cfg.cap_v2v_bps >= 0))
        errors.push_back("caps: must be >= 0");
    for (const TaskProfile& p : cfg.task_profiles) {
        if (!(p.data_bits > 0 && p.compute_cycles > 0 && p.max_delay_s > 0))
            errors.push_back("task_profiles." + p.name + ": d, c, tau must be positive");
    }

    if (errors.size() != initial_errors) return std::nullopt;
    return cfg;
}

std::string config_to_json(const ScenarioConfig& cfg) {
    json root;
    root["T"] = cfg.period_s;
    root["eta_s"] = cfg.sender_share;
    root["eta_r"] = cfg.receiver_share;
    root["v2v_penetration"] = cfg.v2v_penetration;
    root["compute_mix"] = {{"mu_c1", cfg.regular_hz / kGHz},
                           {"mu_c2", cfg.highend_hz / kGHz},
                           {"mu_c3", cfg.edge_hz / kGHz},
                           {"highend_share", cfg.highend_share},
                           {"edge_count", cfg.edge_count}};
    root["lte_rate"] = {{"mu_r", cfg.lte_mean_bps / kMbps},
                        {"sigma_r", cfg.lte_stddev_bps / kMbps},
                        {"floor", cfg.lte_floor_bps / kMbps}};
    json caps;
    if (std::isinf(cfg.cap_lte_bps))
        caps["u_lte"] = "inf";
    else
        caps["u_lte"] = cfg.cap_lte_bps / kMbps;
    if (std::isinf(cfg.cap_v2v_bps))
        caps["u_v2v"] = "inf";
    else
        caps["u_v2v"] = cfg.cap_v2v_bps / kMbps;
    root["caps"] = caps;
    json profiles = json::array();
    for (const TaskProfile& p : cfg.task_profiles)
        profiles.push_back({{"name", p.name},
                            {"d", p.data_bits / kBitsPerKB},
                            {"c", p.compute_cycles},
                            {"tau", p.max_delay_s}});
    root["task_profiles"] = profiles;
    root["microcloud_radius_m"] = cfg.microcloud_radius_m;
    root["seed"] = cfg.seed;
    json sm = json::array();
    for (const auto& [db, bps] : cfg.sinr_map_db_bps) sm.push_back({db, bps / kMbps});
    root["sinr_map"] = sm;
    root["synth"] = {{"initial_cars", cfg.synth_initial_cars},
                     {"arrival_rate_per_s", cfg.synth_arrival_rate_per_s},
                     {"mean_dwell_s", cfg.synth_mean_dwell_s},
                     {"sinr_at_1m_db", cfg.synth_sinr_at_1m_db},
                     {"pathloss_exp", cfg.synth_pathloss_exp}};
    if (!cfg.trace_membership_csv.empty() || !cfg.trace_links_csv.empty())
        root["trace"] = {{"membership_csv", cfg.trace_membership_csv},
                         {"links_csv", cfg.trace_links_csv}};
    return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Timeline

const Snapshot* TraceTimeline::at(double t) const {
    const Snapshot* best = nullptr;
    for (const Snapshot& s : snapshots) {
        if (s.time_s <= t) best = &s;
        else break;
    }
    return best;
}

TraceTimeline synth_timeline(const ScenarioConfig& cfg, double duration_s) {
    struct Car {
        std::string id;
        double x, y;
        double arrive_s, depart_s;
    };
    Rng rng(derive_seed(cfg.seed, hash_str("synth")));
    std::vector<Car> cars;
    int next_id = 0;

    auto spawn = [&](double arrive) {
        Car c;
        c.id = "car" + std::to_string(next_id++);
        double r = cfg.microcloud_radius_m * std::sqrt(rng.next_double());
        double ang = 2.0 * M_PI * rng.next_double();
        c.x = r * std::cos(ang);
        c.y = r * std::sin(ang);
        c.arrive_s = arrive;
        c.depart_s = arrive + rng.exponential(cfg.synth_mean_dwell_s);
        cars.push_back(c);
    };

    for (int i = 0; i < cfg.synth_initial_cars; ++i) spawn(0.0);
    if (cfg.synth_arrival_rate_per_s > 0) {
        double t = rng.exponential(1.0 / cfg.synth_arrival_rate_per_s);
        while (t < duration_s) {
            spawn(t);
            t += rng.exponential(1.0 / cfg.synth_arrival_rate_per_s);
        }
    }

    TraceTimeline tl;
    for (double t = 0.0; t < duration_s - 1e-9; t += cfg.period_s) {
        Snapshot snap;
        snap.time_s = t;
        std::vector<const Car*> present;
        for (const Car& c : cars)
            if (c.arrive_s <= t && t < c.depart_s) present.push_back(&c);
        for (const Car* c : present) snap.members.push_back(Member{c->id, -1});
        for (const Car* a : present) {
            for (const Car* b : present) {
                if (a == b) continue;
                double dist = std::hypot(a->x - b->x, a->y - b->y);
                PairLink l;
                l.src = a->id;
                l.dst = b->id;
                l.sinr_db = cfg.synth_sinr_at_1m_db -
                            10.0 * cfg.synth_pathloss_exp * std::log10(std::max(dist, 1.0));
                snap.links.push_back(l);
            }
        }
        tl.snapshots.push_back(std::move(snap));
    }
    return tl;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        // Trim surrounding whitespace; quoting is not part of the schema.
        size_t b = field.find_first_not_of(" \t\r");
        size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

std::vector<std::string> read_lines(const std::string& path, std::vector<std::string>& errors) {
    std::ifstream in(path);
    if (!in) {
        errors.push_back("cannot open " + path);
        return {};
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

std::optional<TraceTimeline> load_timeline_csv(const std::string& membership_csv,
                                               const std::string& links_csv,
                                               std::vector<std::string>& errors) {
    size_t initial_errors = errors.size();
    std::vector<std::string> mlines = read_lines(membership_csv, errors);
    std::vector<std::string> llines =
        links_csv.empty() ? std::vector<std::string>{} : read_lines(links_csv, errors);
    if (errors.size() != initial_errors) return std::nullopt;

    if (mlines.empty()) {
        errors.push_back(membership_csv + ": empty file");
        return std::nullopt;
    }
    if (split_csv_line(mlines[0]) !=
        std::vector<std::string>{"time_s", "car_id", "present", "v2v_capable"}) {
        errors.push_back(membership_csv +
                         ": header must be time_s,car_id,present,v2v_capable");
        return std::nullopt;
    }

    std::map<double, Snapshot> by_time;
    std::map<double, std::set<std::string>> seen_cars;
    for (size_t i = 1; i < mlines.size(); ++i) {
        if (mlines[i].empty()) continue;
        std::vector<std::string> f = split_csv_line(mlines[i]);
        std::string where = membership_csv + ":" + std::to_string(i + 1);
        if (f.size() != 4) {
            errors.push_back(where + ": expected 4 fields");
            continue;
        }
        double t;
        if (!parse_double(f[0], t) || t < 0) {
            errors.push_back(where + ": bad time_s");
            continue;
        }
        if (f[1].empty()) {
            errors.push_back(where + ": empty car_id");
            continue;
        }
        if (!seen_cars[t].insert(f[1]).second) {
            errors.push_back(where + ": duplicate car " + f[1] + " at time " + f[0]);
            continue;
        }
        Snapshot& snap = by_time[t];
        snap.time_s = t;
        if (f[2] == "0") continue;  // departure marker: keeps the snapshot time alive
        if (f[2] != "1") {
            errors.push_back(where + ": present must be 0 or 1");
            continue;
        }
        Member m;
        m.id = f[1];
        if (f[3] == "0")
            m.v2v_capable = 0;
        else if (f[3] == "1")
            m.v2v_capable = 1;
        else if (f[3].empty() || f[3] == "-1")
            m.v2v_capable = -1;
        else {
            errors.push_back(where + ": v2v_capable must be 0, 1 or -1");
            continue;
        }
        snap.members.push_back(m);
    }

    if (!llines.empty()) {
        std::vector<std::string> header = split_csv_line(llines[0]);
        bool schema_a =
            header == std::vector<std::string>{"time_s", "src_id", "dst_id", "sinr_db"};
        bool schema_b = header == std::vector<std::string>{"time_s", "src_id", "dst_id",
                                                           "rate_bps", "medium"};
        if (!schema_a && !schema_b) {
            errors.push_back(links_csv +
                             ": header must be time_s,src_id,dst_id,sinr_db or "
                             "time_s,src_id,dst_id,rate_bps,medium");
            return std::nullopt;
        }
        for (size_t i = 1; i < llines.size(); ++i) {
            if (llines[i].empty()) continue;
            std::vector<std::string> f = split_csv_line(llines[i]);
            std::string where = links_csv + ":" + std::to_string(i + 1);
            if (f.size() != (schema_a ? 4u : 5u)) {
                errors.push_back(where + ": wrong field count");
                continue;
            }
            double t;
            if (!parse_double(f[0], t)) {
                errors.push_back(where + ": bad time_s");
                continue;
            }
            auto it = by_time.find(t);
            if (it == by_time.end()) {
                errors.push_back(where + ": no membership rows at time " + f[0]);
                continue;
            }
            if (f[1].empty() || f[2].empty() || f[1] == f[2]) {
                errors.push_back(where + ": bad src/dst pair");
                continue;
            }
            PairLink l;
            l.src = f[1];
            l.dst = f[2];
            if (schema_a) {
                if (!parse_double(f[3], l.sinr_db)) {
                    errors.push_back(where + ": bad sinr_db");
                    continue;
                }
            } else {
                if (!parse_double(f[3], l.rate_bps) || l.rate_bps < 0) {
                    errors.push_back(where + ": bad rate_bps");
                    continue;
                }
                std::string med = f[4];
                std::transform(med.begin(), med.end(), med.begin(),
                               [](unsigned char c) { return std::tolower(c); });
                if (med == "lte")
                    l.medium = model::Medium::LTE;
                else if (med == "v2v")
                    l.medium = model::Medium::V2V;
                else {
                    errors.push_back(where + ": medium must be lte or v2v");
                    continue;
                }
                l.has_rate = true;
            }
            it->second.links.push_back(l);
        }
    }

    if (errors.size() != initial_errors) return std::nullopt;
    TraceTimeline tl;
    for (auto& [t, snap] : by_time) tl.snapshots.push_back(std::move(snap));
    return tl;
}

// ---------------------------------------------------------------------------
// Roles

void RoleTracker::update(const std::vector<std::string>& present_ids, double sender_share,
                         double receiver_share, uint64_t seed) {
    std::set<std::string> present(present_ids.begin(), present_ids.end());

    // A car that leaves loses its roles; on return it starts fresh.
    for (auto it = roles_.begin(); it != roles_.end();) {
        if (!present.count(it->first)) it = roles_.erase(it);
        else ++it;
    }
    for (auto it = priority_.begin(); it != priority_.end();) {
        if (!present.count(it->first)) it = priority_.erase(it);
        else ++it;
    }
    for (const std::string& id : present) {
        roles_.try_emplace(id);
        priority_.try_emplace(id, derive_seed(seed, hash_str("role_priority"), hash_str(id)));
    }

    long n = static_cast<long>(present.size());
    long want_s = std::lround(sender_share * static_cast<double>(n));
    long want_r = std::lround(receiver_share * static_cast<double>(n));
    if (want_s > n) want_s = n;
    if (want_r > n - want_s) want_r = n - want_s;

    // Lower hash keeps / gains the role first, so assignments are sticky and
    // reproducible for a given seed.
    auto adjust = [&](bool CarRoles::* role, bool CarRoles::* other, long want) {
        std::vector<std::string> holders, candidates;
        for (auto& [id, r] : roles_) {
            if (r.*role) holders.push_back(id);
            else if (!(r.*other)) candidates.push_back(id);
        }
        auto by_hash = [&](const std::string& a, const std::string& b) {
            uint64_t ha = priority_[a], hb = priority_[b];
            return ha != hb ? ha < hb : a < b;
        };
        std::sort(holders.begin(), holders.end(), by_hash);
        std::sort(candidates.begin(), candidates.end(), by_hash);
        long have = static_cast<long>(holders.size());
        while (have > want) {
            roles_[holders.back()].*role = false;
            holders.pop_back();
            --have;
        }
        for (size_t next = 0; have < want && next < candidates.size(); ++next, ++have)
            roles_[candidates[next]].*role = true;
    };
    adjust(&CarRoles::sender, &CarRoles::receiver, want_s);
    adjust(&CarRoles::receiver, &CarRoles::sender, want_r);
}

const RoleTracker::CarRoles* RoleTracker::roles_of(const std::string& id) const {
    auto it = roles_.find(id);
    return it == roles_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Instance assembly

model::Instance snapshot_instance(const TraceTimeline& timeline, double t,
                                  const ScenarioConfig& cfg, RoleTracker& roles) {
    model::Instance inst;
    inst.period_s = cfg.period_s;
    inst.cap_lte_bps = cfg.cap_lte_bps;
    inst.cap_v2v_bps = cfg.cap_v2v_bps;

    const Snapshot* snap = timeline.at(t);
    if (!snap) return inst;

    std::vector<std::string> ids;
    for (const Member& m : snap->members) ids.push_back(m.id);
    roles.update(ids, cfg.sender_share, cfg.receiver_share, cfg.seed);

    // Capability: trace flags win; otherwise senders and receivers always
    // join, the rest by a stable per-car penetration draw.
    auto capable = [&](const Member& m) {
        if (m.v2v_capable == 0) return false;
        if (m.v2v_capable == 1) return true;
        const RoleTracker::CarRoles* r = roles.roles_of(m.id);
        if (r && (r->sender || r->receiver)) return true;
        Rng d(derive_seed(cfg.seed, hash_str("penetration"), hash_str(m.id)));
        return d.next_double() < cfg.v2v_penetration;
    };

    std::vector<std::string> sender_ids, receiver_ids;
    for (const Member& m : snap->members) {
        if (!capable(m)) continue;
        const RoleTracker::CarRoles* r = roles.roles_of(m.id);
        model::Node node;
        node.id = m.id;
        node.kind = model::NodeKind::Car;
        node.v2v_capable = true;
        node.add_role(model::Role::Worker);
        if (r && r->sender) {
            node.add_role(model::Role::Sender);
            sender_ids.push_back(m.id);
            node.compute_hz = cfg.sender_hz;
        } else {
            Rng d(derive_seed(cfg.seed, hash_str("compute"), hash_str(m.id)));
            node.compute_hz = d.next_double() < cfg.highend_share ? cfg.highend_hz
                                                                  : cfg.regular_hz;
        }
        if (r && r->receiver) {
            node.add_role(model::Role::Receiver);
            receiver_ids.push_back(m.id);
        }
        inst.nodes.push_back(node);
    }
    for (int e = 0; e < cfg.edge_count; ++e) {
        model::Node node;
        node.id = "edge" + std::to_string(e);
        node.kind = model::NodeKind::EdgeServer;
        node.compute_hz = cfg.edge_hz;
        node.add_role(model::Role::Worker);
        inst.nodes.push_back(node);
    }

    auto in_instance = [&](const std::string& id) { return inst.node_index(id) >= 0; };

    // Direct rates from the snapshot; SINR rows go through the mapping table.
    std::map<std::pair<std::string, std::string>, double> rate_of;
    for (const PairLink& l : snap->links) {
        if (!in_instance(l.src) || !in_instance(l.dst)) continue;
        double r = l.has_rate ? l.rate_bps : sinr_to_rate(l.sinr_db, cfg.sinr_map_db_bps);
        rate_of[{l.src, l.dst}] = r;
    }
    // LTE rates not given by the trace: one draw per (car, edge, period),
    // used in both directions.
    int64_t time_key = llround(t * 1000.0);
    for (const model::Node& car : inst.nodes) {
        if (car.kind != model::NodeKind::Car) continue;
        for (int e = 0; e < cfg.edge_count; ++e) {
            std::string eid = "edge" + std::to_string(e);
            if (rate_of.count({car.id, eid}) || rate_of.count({eid, car.id})) continue;
            Rng d(derive_seed(cfg.seed, hash_str("lte_rate"), hash_str(car.id + "|" + eid),
                              static_cast<uint64_t>(time_key)));
            double r = sample_lte_rate(cfg, d);
            rate_of[{car.id, eid}] = r;
            rate_of[{eid, car.id}] = r;
        }
    }

    std::vector<model::RawRate> raw;
    for (const auto& [pair, r] : rate_of)
        if (r > 0) raw.push_back({pair.first, pair.second, r});
    std::vector<std::string> link_errors;
    auto table = model::build_link_table(inst.nodes, raw, link_errors);
    if (!table) {
        inst.nodes.clear();  // malformed trace rows; validate_instance reports downstream
        return inst;
    }
    inst.links = *table;

    // One task type per sender; profiles rotate over senders in id order.
    std::sort(sender_ids.begin(), sender_ids.end());
    std::vector<int> receiver_idx;
    for (const std::string& id : receiver_ids) receiver_idx.push_back(inst.node_index(id));
    std::sort(receiver_idx.begin(), receiver_idx.end());
    if (receiver_idx.empty() && !sender_ids.empty()) {
        // Degenerate share targets: deliver to the first capable non-sender
        // car, or back to the sender itself when it is alone.
        std::string fallback;
        for (const model::Node& n : inst.nodes) {
            if (n.kind != model::NodeKind::Car) continue;
            if (n.has_role(model::Role::Sender)) continue;
            if (fallback.empty() || n.id < fallback) fallback = n.id;
        }
        receiver_idx.push_back(inst.node_index(fallback.empty() ? sender_ids[0] : fallback));
    }
    for (size_t k = 0; k < sender_ids.size(); ++k) {
        const TaskProfile& prof = cfg.task_profiles[k % cfg.task_profiles.size()];
        model::TaskType tt;
        tt.id = "tt_" + sender_ids[k];
        tt.data_bits = prof.data_bits;
        tt.compute_cycles = prof.compute_cycles;
        tt.max_delay_s = prof.max_delay_s;
        tt.sender = inst.node_index(sender_ids[k]);
        tt.receivers = receiver_idx;
        inst.task_types.push_back(tt);
    }
    return inst;
}

}  // namespace offloadsim::scenario
