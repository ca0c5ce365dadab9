#pragma once

// Builders that turn block views of an IegsSystem into ConvexBlockProblem
// instances. All builders are pure functions of their inputs.

#include "oef/ech.hpp"
#include "oef/model.hpp"
#include "oef/qp.hpp"

#include <map>
#include <string>
#include <vector>

namespace oef {

/// Deterministic name -> column index map for one problem.
struct VariableMap {
    std::vector<std::string> names;
    std::map<std::string, int> index;

    int add(const std::string& name);
    int at(const std::string& name) const;          // throws on miss
    bool contains(const std::string& name) const { return index.count(name) > 0; }
    int size() const { return static_cast<int>(names.size()); }
};

/// Incremental assembly of a ConvexBlockProblem.
class ProblemBuilder {
  public:
    VariableMap vars;

    int add_var(const std::string& name, double lb, double ub);
    void add_quadratic(int i, int j, double v);   // coefficient of x_i * x_j in 1/2 x'Qx
    void add_linear(int i, double v);
    void add_constant(double v);
    int add_eq_row(const std::vector<std::pair<int, double>>& entries, double rhs);
    int add_ineq_row(const std::vector<std::pair<int, double>>& entries, double rhs);
    void add_parabola(int flow, int pressure_from, int pressure_to, double weymouth);

    ConvexBlockProblem build() const;

  private:
    std::vector<Triplet> quad_;
    std::vector<double> linear_;
    double constant_ = 0.0;
    std::vector<Triplet> eq_;
    std::vector<double> eq_rhs_;
    std::vector<Triplet> ineq_;
    std::vector<double> ineq_rhs_;
    std::vector<double> lower_, upper_;
    std::vector<ParabolicConstraint> parabolas_;
};

/// One power block: component id lists into the (possibly augmented) system.
struct PowerBlockView {
    int region = 0;
    std::vector<std::string> node_ids;     // includes virtual nodes
    std::vector<std::string> line_ids;
    std::vector<std::string> coal_ids;
    std::vector<std::string> gasgen_ids;   // actual gas-fired generators
};

/// The gas block. `gen_ids` lists the gas-fired generators whose demand
/// enters the gas balance: virtual copies after partitioning
/// (`gens_are_virtual`), the actual generators in a monolithic model.
struct GasBlockView {
    std::vector<std::string> node_ids;
    std::vector<std::string> pipeline_ids;
    std::vector<std::string> compressor_ids;
    std::vector<std::string> well_ids;
    std::vector<std::string> gen_ids;
    bool gens_are_virtual = true;
};

/// View covering the whole gas network with the actual generators feeding
/// the balance rows (the unpartitioned model's gas side).
GasBlockView whole_gas_view(const IegsSystem& sys);

/// View covering the whole power network as a single region.
PowerBlockView whole_power_view(const IegsSystem& sys);

/// Variables and rows (2)-(7) of one power block plus its quadratic cost.
/// Virtual nodes get no balance row. Throws on inverted bounds.
void append_power_block(ProblemBuilder& b, const IegsSystem& sys, const PowerBlockView& view);

/// Variables and rows (8)-(11), (14)-(15) of the gas block with the
/// Weymouth equation replaced by the supplied ECH rows. Throws when a
/// pipeline has no relaxation, naming the pipeline.
void append_gas_block(ProblemBuilder& b, const IegsSystem& sys, const GasBlockView& view,
                      const std::map<std::string, EchConstraintSet>& relaxations);

struct BuiltBlock {
    ConvexBlockProblem problem;
    VariableMap vars;
};

BuiltBlock power_block_constraints(const IegsSystem& sys, const PowerBlockView& view);
BuiltBlock gas_block_constraints(const IegsSystem& sys, const GasBlockView& view,
                                 const std::map<std::string, EchConstraintSet>& relaxations);

}  // namespace oef
