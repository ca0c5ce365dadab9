#pragma once

// Centralized solve of the assembled multi-block model: all blocks stacked
// into one problem with the coupling rows as hard equalities. Serves as the
// oracle for distributed-vs-centralized equivalence.

#include "oef/partition.hpp"
#include "oef/qp.hpp"

namespace oef {

struct JointProblem {
    ConvexBlockProblem problem;
    std::vector<int> offsets;   // column offset of each block
};

/// Stacks block objectives/constraints block-diagonally and appends the
/// coupling rows sum_r A_r x^r = c as equalities.
JointProblem assemble_joint(const CompactForm& cf);

/// Joint solve with a tiny diagonal regularization (1e-8 of the objective
/// scale) so the minimizer is unique even for linear objectives.
SolveReport solve_centralized(const CompactForm& cf, const QpSettings& settings = {});

/// Splits a joint solution vector into per-block vectors.
std::vector<Vector> split_solution(const CompactForm& cf, const Vector& joint);

/// Merges per-block solutions into one named operating point.
PhysicalSolution to_physical(const CompactForm& cf, const std::vector<Vector>& block_x);

}  // namespace oef
