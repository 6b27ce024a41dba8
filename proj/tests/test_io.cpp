#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "offloadsim/assignment.hpp"
#include "offloadsim/experiment.hpp"
#include "offloadsim/instance_io.hpp"
#include "offloadsim/model.hpp"

using namespace offloadsim;

namespace {

model::Instance small_instance() {
    model::Instance ins;
    ins.period_s = 1.0;
    ins.cap_lte_bps = 24e6;
    ins.cap_v2v_bps = model::kInfiniteRate;

    model::Node s;
    s.id = "s";
    s.kind = model::NodeKind::Car;
    s.compute_hz = 1e9;
    s.v2v_capable = true;
    s.add_role(model::Role::Sender);
    s.add_role(model::Role::Worker);
    model::Node w;
    w.id = "w";
    w.kind = model::NodeKind::Car;
    w.compute_hz = 2e9;
    w.v2v_capable = true;
    w.add_role(model::Role::Worker);
    w.add_role(model::Role::Receiver);
    model::Node e;
    e.id = "edge0";
    e.kind = model::NodeKind::EdgeServer;
    e.compute_hz = 4e9;
    e.add_role(model::Role::Worker);
    ins.nodes = {s, w, e};

    std::vector<model::RawRate> raw = {{"s", "w", 1e7}, {"s", "edge0", 2.5e7}};
    std::vector<std::string> errors;
    auto table = model::build_link_table(ins.nodes, raw, errors);
    REQUIRE(errors.empty());
    ins.links = *table;

    model::TaskType tt;
    tt.id = "tt_s";
    tt.data_bits = 1.6e6;
    tt.compute_cycles = 2e8;
    tt.max_delay_s = 0.6;
    tt.sender = 0;
    tt.receivers = {1};
    ins.task_types = {tt};
    return ins;
}

}  // namespace

TEST_CASE("instance json round trip") {
    model::Instance ins = small_instance();
    std::string text = io::instance_to_json(ins);
    std::vector<std::string> errors;
    auto back = io::load_instance_json(text, errors);
    REQUIRE(errors.empty());
    REQUIRE(back.has_value());

    REQUIRE(back->nodes.size() == 3);
    CHECK(back->nodes[0].id == "s");
    CHECK(back->nodes[0].has_role(model::Role::Sender));
    CHECK(back->nodes[0].has_role(model::Role::Worker));
    CHECK(back->nodes[2].kind == model::NodeKind::EdgeServer);
    CHECK(back->period_s == 1.0);
    CHECK(back->cap_lte_bps == 24e6);
    CHECK(std::isinf(back->cap_v2v_bps));
    CHECK(back->links.rate(0, 1) == 1e7);
    CHECK(back->links.med(0, 1) == model::Medium::V2V);
    CHECK(back->links.rate(0, 2) == 2.5e7);
    CHECK(back->links.med(0, 2) == model::Medium::LTE);
    CHECK(back->links.rate(1, 0) == 0.0);
    REQUIRE(back->task_types.size() == 1);
    CHECK(back->task_types[0].sender == 0);
    CHECK(back->task_types[0].receivers == std::vector<int>{1});

    // Serialization is stable: a second pass produces the same bytes.
    CHECK(io::instance_to_json(*back) == text);
}

TEST_CASE("instance json rejects malformed input") {
    std::vector<std::string> errors;
    CHECK_FALSE(io::load_instance_json("[]", errors).has_value());

    errors.clear();
    CHECK_FALSE(io::load_instance_json(R"({"nodes": []})", errors).has_value());
    bool mentions_period = false;
    for (const std::string& e : errors)
        mentions_period = mentions_period || e.find("period_s") != std::string::npos;
    CHECK(mentions_period);

    errors.clear();
    std::string bad_cap = R"({"period_s": 1, "cap_lte_bps": "huge", "nodes": []})";
    CHECK_FALSE(io::load_instance_json(bad_cap, errors).has_value());

    errors.clear();
    std::string bad_sender = R"({
        "period_s": 1,
        "nodes": [{"id": "a", "kind": "car", "compute_hz": 1e9, "roles": ["worker"]}],
        "task_types": [{"id": "t", "data_bits": 1, "compute_cycles": 1,
                        "max_delay_s": 1, "sender": "ghost", "receivers": ["a"]}]
    })";
    CHECK_FALSE(io::load_instance_json(bad_sender, errors).has_value());
    bool mentions_ghost = false;
    for (const std::string& e : errors)
        mentions_ghost = mentions_ghost || e.find("ghost") != std::string::npos;
    CHECK(mentions_ghost);
}

TEST_CASE("assignment json round trip and axis checks") {
    model::Instance ins = small_instance();
    assign::Assignment a;
    a.resize(1, 3);
    a.x = {{0.5, 0.5, 0.0}};
    a.y_lte = {{0.0, 0.0, 0.0}};
    a.y_v2v = {{0.0, 0.8, 0.0}};
    a.m = {{2, 5, 0}};
    a.l = {7};

    std::string text = io::assignment_to_json(a, ins);
    std::vector<std::string> errors;
    auto back = io::load_assignment_json(text, ins, errors);
    REQUIRE(errors.empty());
    REQUIRE(back.has_value());
    CHECK(back->x == a.x);
    CHECK(back->y_lte == a.y_lte);
    CHECK(back->y_v2v == a.y_v2v);
    CHECK(back->m == a.m);
    CHECK(back->l == a.l);  // re-derived from m

    SUBCASE("worker axis mismatch") {
        std::string tampered = text;
        size_t pos = tampered.find("\"w\"");
        REQUIRE(pos != std::string::npos);
        tampered.replace(pos, 3, "\"q\"");
        errors.clear();
        CHECK_FALSE(io::load_assignment_json(tampered, ins, errors).has_value());
        CHECK(errors[0].find("axis mismatch") != std::string::npos);
    }
    SUBCASE("wrong row length") {
        std::string tampered = text;
        size_t pos = tampered.find("    0.5,");
        REQUIRE(pos != std::string::npos);
        tampered.erase(pos, 8);
        errors.clear();
        CHECK_FALSE(io::load_assignment_json(tampered, ins, errors).has_value());
    }
    SUBCASE("missing matrix") {
        errors.clear();
        std::string no_m = R"({"workers": ["s", "w", "edge0"], "task_types": ["tt_s"],
                               "x": [[0,0,0]], "y_lte": [[0,0,0]], "y_v2v": [[0,0,0]]})";
        CHECK_FALSE(io::load_assignment_json(no_m, ins, errors).has_value());
    }
}

TEST_CASE("file helpers") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "offloadsim_io_test";
    fs::create_directories(dir);
    std::string path = (dir / "blob.txt").string();
    std::vector<std::string> errors;
    REQUIRE(io::write_file(path, "alpha\nbeta\n", errors));
    auto text = io::read_file(path, errors);
    REQUIRE(text.has_value());
    CHECK(*text == "alpha\nbeta\n");

    CHECK_FALSE(io::read_file((dir / "missing.txt").string(), errors).has_value());
    CHECK_FALSE(errors.empty());
    fs::remove_all(dir);
}

TEST_CASE("experiment spec parsing") {
    std::vector<std::string> errors;

    SUBCASE("inline config with sweep and solver knobs") {
        std::string text = R"({
            "config": {"T": 1.0, "seed": 3},
            "policies": ["Hybrid", "NoOffload"],
            "sweep": {"key": "penetration", "values": [0, 0.5, 1.0]},
            "seeds": [1, 2, 3],
            "duration_s": 5,
            "solver": {"n_grid": 10, "node_limit": 50000, "gap_tol": 0.01},
            "output_dir": "results"
        })";
        auto spec = exp::load_spec_json(text, errors);
        REQUIRE(errors.empty());
        REQUIRE(spec.has_value());
        CHECK(spec->config_path.empty());
        CHECK_FALSE(spec->config_inline.empty());
        REQUIRE(spec->policies.size() == 2);
        CHECK(spec->policies[0] == assign::Policy::Hybrid);
        CHECK(spec->sweep_key == "penetration");
        CHECK(spec->sweep_values == std::vector<std::string>{"0", "0.5", "1.0"});
        CHECK(spec->seeds == std::vector<uint64_t>{1, 2, 3});
        CHECK(spec->duration_s == 5.0);
        CHECK(spec->grid_size == 10);
        CHECK(spec->solver.node_limit == 50000);
        CHECK(spec->output_dir == "results");
    }
    SUBCASE("config as path, defaults fill the rest") {
        auto spec = exp::load_spec_json(
            R"({"config": "cfg.json", "policies": ["VerticalOnly"]})", errors);
        REQUIRE(spec.has_value());
        CHECK(spec->config_path == "cfg.json");
        CHECK(spec->seeds == std::vector<uint64_t>{1});
        CHECK(spec->duration_s == 10.0);
        CHECK(spec->grid_size == 5);
    }
    SUBCASE("rejects unknown keys and bad policies") {
        CHECK_FALSE(exp::load_spec_json(
                        R"({"config": "c", "policies": ["Hybrid"], "turbo": 1})", errors)
                        .has_value());
        errors.clear();
        CHECK_FALSE(
            exp::load_spec_json(R"({"config": "c", "policies": ["Fastest"]})", errors)
                .has_value());
        errors.clear();
        CHECK_FALSE(exp::load_spec_json(R"({"config": "c"})", errors).has_value());
    }
}

TEST_CASE("experiment execution is deterministic") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "offloadsim_exp_test";
    fs::remove_all(base);
    fs::create_directories(base);

    std::string spec_text = R"({
        "config": {"T": 1.0, "eta_s": 0.2, "eta_r": 0.2, "seed": 5,
                   "synth": {"initial_cars": 8, "arrival_rate_per_s": 0,
                             "mean_dwell_s": 3600}},
        "policies": ["NoOffload", "VerticalOnly"],
        "seeds": [1, 2],
        "duration_s": 3,
        "output_dir": ")" + (base / "a").string() + R"("
    })";

    std::vector<std::string> errors;
    auto spec = exp::load_spec_json(spec_text, errors);
    REQUIRE(errors.empty());
    REQUIRE(spec.has_value());

    exp::ExperimentResult ra = exp::execute(*spec);
    REQUIRE(ra.ok());
    CHECK_FALSE(ra.files_written.empty());

    exp::ExperimentSpec spec_b = *spec;
    spec_b.output_dir = (base / "b").string();
    spec_b.pool_size = 4;  // parallel rerun must produce the same bytes
    exp::ExperimentResult rb = exp::execute(spec_b);
    REQUIRE(rb.ok());

    // 2 policies x 2 seeds run files + runs.csv + summary.csv + manifest.json.
    CHECK(ra.files_written.size() == 7);
    CHECK(ra.summary_csv == rb.summary_csv);
    CHECK(ra.summary_csv.rfind(exp::kSummaryCsvHeader, 0) == 0);

    for (const std::string& fa : ra.files_written) {
        if (fa.size() >= 13 && fa.substr(fa.size() - 13) == "manifest.json")
            continue;  // differing output paths are recorded inside
        fs::path rel = fs::path(fa).filename();
        auto ta = io::read_file(fa, errors);
        auto tb = io::read_file((base / "b" / rel).string(), errors);
        REQUIRE(ta.has_value());
        REQUIRE(tb.has_value());
        CHECK(*ta == *tb);
    }

    auto runs = io::read_file((base / "a" / "runs.csv").string(), errors);
    REQUIRE(runs.has_value());
    CHECK(runs->rfind(exp::kRunsCsvHeader, 0) == 0);
    CHECK(runs->find("NoOffload") != std::string::npos);
    CHECK(runs->find("VerticalOnly") != std::string::npos);

    auto manifest = io::read_file((base / "a" / "manifest.json").string(), errors);
    REQUIRE(manifest.has_value());
    CHECK(manifest->find("runs.csv") != std::string::npos);

    fs::remove_all(base);
}

TEST_CASE("experiment records dropped periods and finishes the rest") {
    namespace fs = std::filesystem;
    fs::path base = fs::temp_directory_path() / "offloadsim_exp_issues";
    fs::remove_all(base);
    fs::create_directories(base);

    // At t=0 no car may join and there is no edge, so the period has no
    // workers and gets dropped; at t=1 the cars come back.
    std::string membership = (base / "m.csv").string();
    std::vector<std::string> errors;
    REQUIRE(io::write_file(membership,
                           "time_s,car_id,present,v2v_capable\n"
                           "0,a,1,0\n0,b,1,0\n"
                           "1,a,1,1\n1,b,1,1\n",
                           errors));

    std::string spec_text = R"({
        "config": {"T": 1.0, "eta_s": 0.5, "eta_r": 0.5,
                   "compute_mix": {"edge_count": 0},
                   "trace": {"membership_csv": ")" + membership + R"("}},
        "policies": ["NoOffload", "Hybrid"],
        "seeds": [3],
        "duration_s": 2,
        "output_dir": ")" + (base / "out").string() + R"("
    })";

    auto spec = exp::load_spec_json(spec_text, errors);
    REQUIRE(errors.empty());
    REQUIRE(spec.has_value());

    exp::ExperimentResult r = exp::execute(*spec);
    REQUIRE(r.ok());
    CHECK(r.files_written.size() == 5);  // both runs still wrote their files

    auto manifest = io::read_file((base / "out" / "manifest.json").string(), errors);
    REQUIRE(manifest.has_value());
    nlohmann::json doc = nlohmann::json::parse(*manifest, nullptr, false);
    REQUIRE_FALSE(doc.is_discarded());
    REQUIRE(doc.contains("issues"));
    REQUIRE(doc["issues"].size() == 2);  // one entry per affected run
    for (const auto& issue : doc["issues"]) {
        CHECK(issue["file"].get<std::string>().find("seed3") != std::string::npos);
        REQUIRE(issue["notes"].size() == 1);
        CHECK(issue["notes"][0].get<std::string>().rfind("period 0:", 0) == 0);
    }

    auto runs = io::read_file((base / "out" / "runs.csv").string(), errors);
    REQUIRE(runs.has_value());
    CHECK(std::count(runs->begin(), runs->end(), '\n') == 3);  // header + 2 rows
    CHECK(runs->find("run_sw0_NoOffload_seed3.csv,0,1,") != std::string::npos);
    CHECK(runs->find("run_sw0_Hybrid_seed3.csv,0,1,") != std::string::npos);

    fs::remove_all(base);
}
