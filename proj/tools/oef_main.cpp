#include "oef/io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (!token.empty()) out.push_back(std::stod(token));
    }
    return out;
}

oef::SolveMode mode_from_string(const std::string& mode) {
    if (mode == "jacobi") return oef::SolveMode::Jacobi;
    if (mode == "gauss") return oef::SolveMode::Gauss;
    if (mode == "centralized") return oef::SolveMode::Centralized;
    throw CLI::ValidationError("--mode", "must be jacobi, gauss or centralized");
}

void print_summary(const oef::ResultReport& rep) {
    std::cout << "status:        " << oef::to_string(rep.solve_status) << "\n"
              << "iterations:    " << rep.iterations << "\n"
              << "objective:     " << rep.objective << "\n"
              << "weymouth:      " << (rep.weymouth_feasible ? "F" : "IF") << "\n"
              << "recovery:      " << oef::to_string(rep.recovery.status)
              << " (slack " << rep.recovery.objective << ")\n"
              << "verification:  " << (rep.verification.pass ? "pass" : "fail")
              << " (max violation " << rep.verification.max_violation << ")\n"
              << "wall time:     " << rep.wall_ms << " ms\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed optimal energy flow for integrated electricity-gas systems"};
    app.require_subcommand(1);

    std::string network_path, mode = "jacobi", trace_path, report_path;
    std::string grid, scales_text;
    oef::SolveOptions opts;
    double budget = 60.0;

    auto add_jadmm_flags = [&](CLI::App* cmd) {
        cmd->add_option("--d", opts.jadmm.d, "penalty parameter");
        cmd->add_option("--gamma", opts.jadmm.gamma, "damping parameter in (0,2)");
        cmd->add_option("--p-factor", opts.jadmm.p_factor, "proximal matrix factor");
        cmd->add_option("--eps-primal", opts.jadmm.eps_primal, "primal stop threshold (squared)");
        cmd->add_option("--eps-dual", opts.jadmm.eps_dual, "dual stop threshold (squared)");
        cmd->add_option("--max-iter", opts.jadmm.max_iterations, "iteration cap");
        cmd->add_option("--threads", opts.jadmm.threads, "block-solve threads (0 = hardware)");
    };

    auto* solve = app.add_subcommand("solve", "solve one network");
    solve->add_option("network", network_path, "network file")->required();
    solve->add_option("--mode", mode, "jacobi | gauss | centralized");
    solve->add_option("--trace", trace_path, "write per-iteration residual CSV");
    solve->add_option("--report", report_path, "write full JSON report");
    add_jadmm_flags(solve);

    auto* sweep = app.add_subcommand("sweep", "grid over (d, gamma)");
    sweep->add_option("network", network_path, "network file")->required();
    sweep->add_option("--grid", grid, "d1,d2,...:g1,g2,...")->required();
    sweep->add_option("--budget", budget, "per-cell time budget (s)");
    sweep->add_option("--eps-primal", opts.jadmm.eps_primal, "primal stop threshold (squared)");
    sweep->add_option("--eps-dual", opts.jadmm.eps_dual, "dual stop threshold (squared)");
    sweep->add_option("--max-iter", opts.jadmm.max_iterations, "iteration cap");
    sweep->add_option("--threads", opts.jadmm.threads, "block-solve threads");

    auto* scan = app.add_subcommand("scan-loads", "recoverability across load scales");
    scan->add_option("network", network_path, "network file")->required();
    scan->add_option("--scales", scales_text, "comma-separated load multipliers")->required();
    std::string scan_mode = "centralized";
    scan->add_option("--mode", scan_mode, "jacobi | gauss | centralized");
    add_jadmm_flags(scan);

    auto* validate = app.add_subcommand("validate", "check a network file");
    validate->add_option("network", network_path, "network file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            oef::IegsSystem sys = oef::load_network(network_path);
            oef::ValidationReport rep = oef::validate_system(sys);
            if (rep.ok()) {
                std::cout << "ok\n";
                return 0;
            }
            std::cerr << rep.to_string();
            return 1;
        }
        oef::IegsSystem sys = oef::load_network(network_path);

        if (solve->parsed()) {
            opts.mode = mode_from_string(mode);
            oef::ResidualTrace trace;
            oef::ResultReport rep = oef::cmd_solve(sys, opts, &trace);
            print_summary(rep);
            if (!trace_path.empty()) {
                std::ofstream out(trace_path);
                trace.write_csv(out);
            }
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                out << rep.to_json();
            }
            return rep.exit_code();
        }
        if (sweep->parsed()) {
            const auto colon = grid.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error("--grid expects d1,d2,...:g1,g2,...");
            oef::SweepResult res = oef::cmd_sweep(sys, parse_list(grid.substr(0, colon)),
                                                  parse_list(grid.substr(colon + 1)), opts, budget);
            std::cout << res.format_table();
            return 0;
        }
        if (scan->parsed()) {
            opts.mode = mode_from_string(scan_mode);
            oef::ScanResult res = oef::cmd_scan_loads(sys, parse_list(scales_text), opts);
            std::cout << res.format_table();
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
