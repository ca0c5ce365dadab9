#pragma once

// Domain types for the integrated electricity-gas system and evaluators for
// its physical constraints. All containers are immutable after construction
// and safe for shared concurrent reads.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oef {

struct PowerNode {
    std::string id;
    double theta_min = -0.5;   // rad
    double theta_max = 0.5;    // rad
    int block_id = 0;          // region tag
    bool is_virtual = false;
    std::optional<std::string> mirror_of;
};

struct PowerLine {
    std::string id;
    std::string from_node;
    std::string to_node;
    double x = 0.0;        // reactance (p.u.)
    double p_cap = 0.0;    // thermal limit (MW)
    int block_id = 0;
};

struct CoalGenerator {
    std::string id;
    std::string node;
    double p_min = 0.0;    // MW
    double p_max = 0.0;    // MW
    double c1 = 0.0;       // $/MW^2
    double c2 = 0.0;       // $/MW
    double c3 = 0.0;       // $
};

struct GasFiredGenerator {
    std::string id;
    std::string power_node;
    std::string gas_node;
    double g_min = 0.0;    // MW
    double g_max = 0.0;    // MW
    double chi = 0.0;      // Sm3/h per MW
    bool is_virtual = false;
    std::optional<std::string> mirror_of;
};

struct GasNode {
    std::string id;
    double pi_min = 0.0;   // bar^2
    double pi_max = 0.0;   // bar^2
};

struct GasPipeline {
    std::string id;
    std::string from_node;
    std::string to_node;
    double weymouth = 0.0;                 // (Sm3/h)^2 per bar^2
    std::optional<double> g_cap_min;       // Sm3/h, usually <= 0
    std::optional<double> g_cap_max;       // Sm3/h
    bool fixed_direction = false;          // flow locked from->to
};

struct GasCompressor {
    std::string id;
    std::string from_node;   // inflow i(c)
    std::string to_node;     // outflow j(c)
    double alpha = 1.0;      // compression constant, >= 1
    double g_cap = 0.0;      // Sm3/h
};

struct GasWell {
    std::string id;
    std::string node;
    double g_min = 0.0;      // Sm3/h
    double g_max = 0.0;      // Sm3/h
    double cost = 0.0;       // $/Sm3
};

enum class LoadKind { Power, Gas };

struct Load {
    std::string id;
    std::string node;
    LoadKind kind = LoadKind::Power;
    double amount = 0.0;     // MW or Sm3/h
};

struct IegsSystem {
    std::vector<PowerNode> power_nodes;
    std::vector<PowerLine> power_lines;
    std::vector<CoalGenerator> coal_generators;
    std::vector<GasFiredGenerator> gas_generators;
    std::vector<GasNode> gas_nodes;
    std::vector<GasPipeline> pipelines;
    std::vector<GasCompressor> compressors;
    std::vector<GasWell> wells;
    std::vector<Load> loads;

    const PowerNode* find_power_node(const std::string& id) const;
    const GasNode* find_gas_node(const std::string& id) const;
    const GasFiredGenerator* find_gas_generator(const std::string& id) const;
};

struct ValidationIssue {
    std::string component;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    bool mentions(const std::string& text) const;
    std::string to_string() const;
};

/// Checks every type invariant and cross-reference of the system.
ValidationReport validate_system(const IegsSystem& sys);

/// Signed Weymouth residual g^2 * sgn(pi_i, pi_j) - W * (pi_i - pi_j),
/// with sgn = +1 when pi_i >= pi_j. Zero iff the point satisfies the signed
/// Weymouth equation.
double weymouth_residual(const GasPipeline& pipe, double flow, double pi_from, double pi_to);

/// A solved operating point, keyed by canonical variable names:
///   p:<gen>, gg:<gen>, theta:<node>, flow:<line>,
///   w:<well>, comp:<compressor>, pipe:<pipeline>, pi:<gas node>.
struct PhysicalSolution {
    std::map<std::string, double> values;

    double at(const std::string& key) const;
    bool has(const std::string& key) const { return values.count(key) > 0; }
    void set(const std::string& key, double v) { values[key] = v; }
};

struct NodeResidual {
    std::string node;
    bool is_power = false;
    double residual = 0.0;   // injections minus withdrawals minus load
};

/// Per-node imbalances of the power and gas balance equations. Virtual
/// power nodes carry no balance row and are skipped.
std::vector<NodeResidual> balance_residuals(const IegsSystem& sys, const PhysicalSolution& sol);

}  // namespace oef
