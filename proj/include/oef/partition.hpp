#pragma once

// Decouples an integrated system into N blocks (power blocks by region, the
// gas block last) by inserting virtual gas-fired generators and virtual
// power nodes, and assembles the compact multi-block form
//   min f_1(x^1) + ... + f_N(x^N)   s.t.  A_1 x^1 + ... + A_N x^N = c
// whose rows are the virtual/actual coupling constraints.

#include "oef/constraints.hpp"
#include "oef/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace oef {

struct BlockPartition {
    IegsSystem system;   // augmented copy with virtual components
    std::vector<PowerBlockView> power_blocks;   // ascending region id
    GasBlockView gas_block;
    int num_blocks = 0;  // N = power blocks + gas block

    struct VirtualNode {
        std::string virtual_id;
        std::string actual_id;
        int actual_block = 0;   // block index holding the actual node
        int virtual_block = 0;  // block index holding the replica
    };
    struct VirtualGenerator {
        std::string virtual_id;
        std::string actual_id;
        int actual_block = 0;
    };
    std::vector<VirtualNode> virtual_nodes;
    std::vector<VirtualGenerator> virtual_generators;
    std::vector<int> block_regions;   // region id per power block index
};

struct CouplingConstraint {
    enum class Kind { PhaseAngle, GasGenerator };
    Kind kind = Kind::PhaseAngle;
    int left_block = 0;
    std::string left_var;    // variable name inside the left block
    int right_block = 0;
    std::string right_var;
    double scale = 1.0;
};

struct ScalingPlan {
    std::vector<double> row_scale;   // one factor per coupling row
};

/// One block of the compact form.
struct BlockModel {
    std::string name;
    ConvexBlockProblem problem;   // f_r and Omega^r
    VariableMap vars;
    SparseMatrix coupling;        // A_r, rows = coupling constraints
};

struct CompactForm {
    std::vector<BlockModel> blocks;
    Vector rhs;                   // c, zero for the coupling rows here
    int num_rows = 0;

    int num_blocks() const { return static_cast<int>(blocks.size()); }
};

/// Splits the system into per-region power blocks plus the gas block.
/// Every gas-fired generator gets a virtual twin at its gas node; every
/// cross-region line is split through a pair of virtual nodes (full
/// reactance on each half, so either block's DC row reduces to the original
/// line equation once the phase angles agree).
/// Throws on an empty/incomplete region map or region tags on gas nodes.
BlockPartition decouple(const IegsSystem& sys, const std::map<std::string, int>& regions);

/// One equality per virtual node (theta) and per virtual generator (output),
/// oriented actual-minus-virtual, unit scale.
std::vector<CouplingConstraint> coupling_constraints(const BlockPartition& part);

/// Phase-angle rows scaled by 1/max(|theta_min|, |theta_max|) of the coupled
/// node, generator rows by 1/g_max; zero magnitudes fall back to 1.
ScalingPlan default_scaling(const BlockPartition& part,
                            const std::vector<CouplingConstraint>& couplings);

/// Builds every block problem and the scaled coupling matrices A_r.
/// Throws when a coupling references a variable absent from its block.
CompactForm assemble_compact(const BlockPartition& part,
                             const std::vector<CouplingConstraint>& couplings,
                             const ScalingPlan& scaling,
                             const std::map<std::string, EchConstraintSet>& relaxations);

}  // namespace oef
