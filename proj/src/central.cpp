#include "oef/central.hpp"

#include <stdexcept>

namespace oef {

JointProblem assemble_joint(const CompactForm& cf) {
    JointProblem joint;
    int total = 0;
    for (const auto& block : cf.blocks) {
        joint.offsets.push_back(total);
        total += block.problem.num_vars;
    }
    ConvexBlockProblem p = ConvexBlockProblem::make(total);

    std::vector<Triplet> quad, eq, ineq;
    std::vector<double> eq_rhs, ineq_rhs;
    double constant = 0.0;
    for (size_t b = 0; b < cf.blocks.size(); ++b) {
        const auto& prob = cf.blocks[b].problem;
        const int off = joint.offsets[b];
        for (int k = 0; k < prob.quadratic.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(prob.quadratic, k); it; ++it)
                quad.emplace_back(off + static_cast<int>(it.row()), off + static_cast<int>(it.col()),
                                  it.value());
        for (int j = 0; j < prob.num_vars; ++j) {
            p.linear[off + j] = prob.linear[j];
            p.lower[off + j] = prob.lower[j];
            p.upper[off + j] = prob.upper[j];
        }
        constant += prob.constant;
        const int eq_base = static_cast<int>(eq_rhs.size());
        for (int k = 0; k < prob.eq.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(prob.eq, k); it; ++it)
                eq.emplace_back(eq_base + static_cast<int>(it.row()), off + static_cast<int>(it.col()),
                                it.value());
        for (int i = 0; i < prob.eq_rhs.size(); ++i) eq_rhs.push_back(prob.eq_rhs[i]);
        const int ineq_base = static_cast<int>(ineq_rhs.size());
        for (int k = 0; k < prob.ineq.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(prob.ineq, k); it; ++it)
                ineq.emplace_back(ineq_base + static_cast<int>(it.row()),
                                  off + static_cast<int>(it.col()), it.value());
        for (int i = 0; i < prob.ineq_rhs.size(); ++i) ineq_rhs.push_back(prob.ineq_rhs[i]);
        for (const auto& pc : prob.parabolas)
            p.parabolas.push_back({off + pc.flow, off + pc.pressure_from, off + pc.pressure_to,
                                   pc.weymouth});
    }
    // Coupling rows as hard equalities.
    const int coup_base = static_cast<int>(eq_rhs.size());
    for (size_t b = 0; b < cf.blocks.size(); ++b) {
        const auto& A = cf.blocks[b].coupling;
        const int off = joint.offsets[b];
        for (int k = 0; k < A.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(A, k); it; ++it)
                eq.emplace_back(coup_base + static_cast<int>(it.row()),
                                off + static_cast<int>(it.col()), it.value());
    }
    for (int i = 0; i < cf.rhs.size(); ++i) eq_rhs.push_back(cf.rhs[i]);

    p.quadratic.setFromTriplets(quad.begin(), quad.end());
    p.constant = constant;
    p.eq.resize(static_cast<int>(eq_rhs.size()), total);
    p.eq.setFromTriplets(eq.begin(), eq.end());
    p.eq_rhs = Eigen::Map<const Vector>(eq_rhs.data(), static_cast<Eigen::Index>(eq_rhs.size()));
    p.ineq.resize(static_cast<int>(ineq_rhs.size()), total);
    p.ineq.setFromTriplets(ineq.begin(), ineq.end());
    p.ineq_rhs = Eigen::Map<const Vector>(ineq_rhs.data(), static_cast<Eigen::Index>(ineq_rhs.size()));

    joint.problem = std::move(p);
    return joint;
}

SolveReport solve_centralized(const CompactForm& cf, const QpSettings& settings) {
    JointProblem joint = assemble_joint(cf);
    double scale = 0.0;
    for (int k = 0; k < joint.problem.quadratic.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(joint.problem.quadratic, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    if (joint.problem.linear.size() > 0)
        scale = std::max(scale, joint.problem.linear.cwiseAbs().maxCoeff());
    joint.problem.add_diagonal_regularization(1e-8 * std::max(1.0, scale));
    return solve_block(joint.problem, settings);
}

std::vector<Vector> split_solution(const CompactForm& cf, const Vector& joint) {
    std::vector<Vector> out;
    int off = 0;
    for (const auto& block : cf.blocks) {
        out.push_back(joint.segment(off, block.problem.num_vars));
        off += block.problem.num_vars;
    }
    if (off != joint.size()) throw std::invalid_argument("split_solution: size mismatch");
    return out;
}

PhysicalSolution to_physical(const CompactForm& cf, const std::vector<Vector>& block_x) {
    PhysicalSolution sol;
    for (size_t b = 0; b < cf.blocks.size(); ++b) {
        const auto& vars = cf.blocks[b].vars;
        for (int j = 0; j < vars.size(); ++j) sol.set(vars.names[j], block_x[b][j]);
    }
    return sol;
}

}  // namespace oef
