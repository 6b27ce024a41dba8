// Command line front end: run experiments, compute/verify single assignments,
// export the task-count MILP as MPS.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "offloadsim/assignment.hpp"
#include "offloadsim/experiment.hpp"
#include "offloadsim/instance_io.hpp"
#include "offloadsim/milp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRunFailure = 2;

int report_errors(const std::vector<std::string>& errors, int code) {
    for (const std::string& e : errors) std::cerr << "error: " << e << "\n";
    return code;
}

std::optional<offloadsim::model::Instance> load_instance(const std::string& path) {
    std::vector<std::string> errors;
    auto text = offloadsim::io::read_file(path, errors);
    if (!text) {
        report_errors(errors, 0);
        return std::nullopt;
    }
    auto ins = offloadsim::io::load_instance_json(*text, errors);
    if (!ins) report_errors(errors, 0);
    return ins;
}

int cmd_run(const std::string& spec_path) {
    namespace exp = offloadsim::exp;
    std::vector<std::string> errors;
    auto text = offloadsim::io::read_file(spec_path, errors);
    if (!text) return report_errors(errors, kExitValidation);
    auto spec = exp::load_spec_json(*text, errors);
    if (!spec) return report_errors(errors, kExitValidation);

    exp::ExperimentResult res = exp::execute(*spec);
    if (!res.ok()) return report_errors(res.errors, kExitRunFailure);
    std::cout << res.summary_csv;
    std::cerr << res.files_written.size() << " files written to " << spec->output_dir << "\n";
    return kExitOk;
}

int cmd_assign(const std::string& instance_path, const std::string& solver,
               const std::string& policy_str, int n_grid, uint64_t seed,
               const std::string& out_path) {
    namespace assign = offloadsim::assign;
    auto ins = load_instance(instance_path);
    if (!ins) return kExitValidation;

    assign::Policy policy;
    if (!assign::parse_policy(policy_str, policy)) {
        std::cerr << "error: unknown policy " << policy_str << "\n";
        return kExitValidation;
    }

    if (solver == "mps-export") {
        offloadsim::model::Instance target = *ins;
        assign::BuildResult built = assign::build_p1(target, n_grid);
        if (!built.ok()) return report_errors(built.errors, kExitValidation);
        std::string mps = offloadsim::milp::write_mps(built.problem);
        std::vector<std::string> errors;
        if (out_path.empty()) {
            std::cout << mps;
        } else if (!offloadsim::io::write_file(out_path, mps, errors)) {
            return report_errors(errors, kExitRunFailure);
        }
        return kExitOk;
    }
    if (solver != "builtin") {
        std::cerr << "error: --solver must be builtin or mps-export\n";
        return kExitValidation;
    }

    assign::PolicyResult pr = assign::compute_assignment(*ins, policy, seed, n_grid);
    if (!pr.ok()) return report_errors(pr.errors, kExitRunFailure);
    std::cerr << "solver: " << offloadsim::milp::status_name(pr.solver_status) << ", "
              << pr.solver_nodes << " nodes" << (pr.used_incumbent ? ", incumbent taken" : "")
              << "\n";
    std::string text = offloadsim::io::assignment_to_json(pr.assignment, *ins);
    std::vector<std::string> errors;
    if (out_path.empty()) {
        std::cout << text;
    } else if (!offloadsim::io::write_file(out_path, text, errors)) {
        return report_errors(errors, kExitRunFailure);
    }
    return kExitOk;
}

int cmd_verify(const std::string& instance_path, const std::string& assignment_path) {
    namespace assign = offloadsim::assign;
    auto ins = load_instance(instance_path);
    if (!ins) return kExitValidation;
    std::vector<std::string> errors;
    auto text = offloadsim::io::read_file(assignment_path, errors);
    if (!text) return report_errors(errors, kExitValidation);
    auto a = offloadsim::io::load_assignment_json(*text, *ins, errors);
    if (!a) return report_errors(errors, kExitValidation);

    assign::Report report = assign::verify_assignment(*ins, *a);
    for (const assign::CheckItem& item : report.items) {
        std::printf("%-16s %s", item.family.c_str(), item.pass ? "pass" : "FAIL");
        if (!item.pass)
            std::printf("  worst violation %.3g  (%s)", item.worst_violation,
                        item.detail.c_str());
        std::printf("\n");
    }
    return report.all_pass ? kExitOk : kExitValidation;
}

int cmd_export_mps(const std::string& instance_path, const std::string& out_path, int n_grid) {
    auto ins = load_instance(instance_path);
    if (!ins) return kExitValidation;
    offloadsim::assign::BuildResult built = offloadsim::assign::build_p1(*ins, n_grid);
    if (!built.ok()) return report_errors(built.errors, kExitValidation);
    std::string mps = offloadsim::milp::write_mps(built.problem);
    std::vector<std::string> errors;
    if (out_path.empty()) {
        std::cout << mps;
    } else if (!offloadsim::io::write_file(out_path, mps, errors)) {
        return report_errors(errors, kExitRunFailure);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"offloadsim: cooperative-perception offloading simulator"};
    app.require_subcommand(1);

    std::string spec_path;
    CLI::App* run = app.add_subcommand("run", "run an experiment spec");
    run->add_option("spec", spec_path, "experiment spec JSON")->required();

    std::string instance_path, solver = "builtin", policy = "Hybrid", out_path;
    int n_grid = 5;
    uint64_t seed = 1;
    CLI::App* assign_cmd = app.add_subcommand("assign", "compute an assignment");
    assign_cmd->add_option("--instance", instance_path, "instance JSON")->required();
    assign_cmd->add_option("--solver", solver, "builtin | mps-export");
    assign_cmd->add_option("--policy", policy, "Hybrid | VerticalOnly | NoOffload | RandomHybrid");
    assign_cmd->add_option("--n-grid", n_grid, "delay grid size N");
    assign_cmd->add_option("--seed", seed, "seed for randomized policies");
    assign_cmd->add_option("-o,--output", out_path, "output path (default stdout)");

    std::string assignment_path;
    CLI::App* verify = app.add_subcommand("verify", "check an assignment against an instance");
    verify->add_option("--instance", instance_path, "instance JSON")->required();
    verify->add_option("--assignment", assignment_path, "assignment JSON")->required();

    CLI::App* export_mps = app.add_subcommand("export-mps", "write the MILP in MPS format");
    export_mps->add_option("--instance", instance_path, "instance JSON")->required();
    export_mps->add_option("-o,--output", out_path, "output .mps path (default stdout)");
    export_mps->add_option("--n-grid", n_grid, "delay grid size N");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    if (run->parsed()) return cmd_run(spec_path);
    if (assign_cmd->parsed()) return cmd_assign(instance_path, solver, policy, n_grid, seed, out_path);
    if (verify->parsed()) return cmd_verify(instance_path, assignment_path);
    if (export_mps->parsed()) return cmd_export_mps(instance_path, out_path, n_grid);
    return kExitValidation;
}
