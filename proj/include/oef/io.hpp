#pragma once

// Network file format (versioned JSON), result reports, and the drivers
// behind the CLI commands: solve, parameter sweep and load-scale scan.

#include "oef/jadmm.hpp"
#include "oef/model.hpp"
#include "oef/recovery.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace oef {

/// Parses a network document. Unknown fields, unit mismatches and duplicate
/// ids are rejected with the JSON path of the offending entry.
IegsSystem load_network(const std::filesystem::path& path);
IegsSystem parse_network(const std::string& text, const std::string& origin = "<input>");

/// Canonical save: sections and ids sorted, fixed number formatting, so a
/// load/save round trip is byte-identical.
void save_network(const IegsSystem& sys, const std::filesystem::path& path);
std::string serialize_network(const IegsSystem& sys);

/// Region map read from the inline region tags of the power nodes.
std::map<std::string, int> region_map(const IegsSystem& sys);

enum class SolveMode { Jacobi, Gauss, Centralized };

std::string to_string(SolveMode m);

struct SolveOptions {
    SolveMode mode = SolveMode::Jacobi;
    JadmmConfig jadmm;
    double central_tolerance = 1e-8;
    double verify_tolerance = 1e-6;
};

struct ResultReport {
    SolveMode mode = SolveMode::Jacobi;
    JadmmStatus solve_status = JadmmStatus::MaxIter;
    int iterations = 0;
    double wall_ms = 0.0;
    double objective = 0.0;
    PhysicalSolution solution;               // merged, physical units
    std::vector<double> coupling_residuals;  // per coupling row, scaled units
    bool weymouth_feasible = false;          // exact Weymouth already satisfied
    RecoveryOutcome recovery;
    VerifyReport verification;               // of the recovered solution
    SolveOptions config;                     // echo
    std::string failed_block;

    /// 0 converged+recovered, 2 converged but not recovered, 3 max-iter.
    int exit_code() const;
    std::string to_json() const;
};

/// Partition -> ECH -> solve -> recovery -> verification.
ResultReport cmd_solve(const IegsSystem& sys, const SolveOptions& opts,
                       ResidualTrace* trace_out = nullptr);

struct SweepCell {
    double d = 0.0;
    double gamma = 0.0;
    JadmmStatus status = JadmmStatus::MaxIter;
    int iterations = 0;
    double wall_ms = 0.0;
    bool over_budget = false;
};

struct SweepResult {
    std::vector<double> d_values;
    std::vector<double> gamma_values;
    std::vector<SweepCell> cells;   // row-major over (d, gamma)
    std::string format_table() const;
};

/// One distributed solve per (d, gamma) pair under a per-cell time budget.
SweepResult cmd_sweep(const IegsSystem& sys, const std::vector<double>& d_values,
                      const std::vector<double>& gamma_values, const SolveOptions& base,
                      double budget_seconds = 60.0);

struct ScanRow {
    double scale = 0.0;
    double portion = 0.0;          // well output over total well capacity
    bool solved = false;
    bool weymouth_feasible = false;   // "F" column; false prints IF
    bool recovered = false;           // "Y"/"N"
    double objective = 0.0;
    std::string status;
};

struct ScanResult {
    std::vector<ScanRow> rows;
    std::string format_table() const;
};

/// Scales every load, solves (centralized by default), checks recovery.
ScanResult cmd_scan_loads(const IegsSystem& sys, const std::vector<double>& scales,
                          const SolveOptions& base);

}  // namespace oef
