#pragma once

// Strictly convex quadratic subproblem solver used by every solve path in
// this library. The solver is a first-order operator-splitting method: the
// constraint set is split into interval rows (equalities, inequalities and
// variable boxes) plus rotated-parabola regions g^2 <= W*(t1 - t2), each of
// which admits a cheap Euclidean projection. An active-set polish step
// refines converged iterates to near machine precision when the active
// constraints are linear.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace oef {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Region g^2 <= W * (pi_from - pi_to) linking a flow variable to two
/// pressure-square variables.
struct ParabolicConstraint {
    int flow = -1;
    int pressure_from = -1;
    int pressure_to = -1;
    double weymouth = 0.0;
};

/// One block's subproblem: 1/2 x'Qx + q'x + r over linear equalities,
/// inequalities, variable boxes and parabolic regions.
struct ConvexBlockProblem {
    int num_vars = 0;
    SparseMatrix quadratic;   // n x n, symmetric PSD
    Vector linear;            // n
    double constant = 0.0;

    SparseMatrix eq;          // me x n, eq * x == eq_rhs
    Vector eq_rhs;
    SparseMatrix ineq;        // mi x n, ineq * x <= ineq_rhs
    Vector ineq_rhs;
    Vector lower;             // n, -inf allowed
    Vector upper;             // n, +inf allowed
    std::vector<ParabolicConstraint> parabolas;

    // True once a positive-definite term (proximal or regularization) has
    // been folded into `quadratic`, so the minimizer is unique.
    bool strictly_convex = false;

    static ConvexBlockProblem make(int n);

    double objective_value(const Vector& x) const;
    /// Largest absolute violation over every constraint class.
    double max_violation(const Vector& x) const;
    /// Adds t * I to the quadratic term and marks the problem strictly convex.
    void add_diagonal_regularization(double t);
};

enum class SolveStatus { Optimal, MaxIter, InfeasibleDetected };

std::string to_string(SolveStatus s);

struct SolveReport {
    Vector solution;
    double objective = 0.0;
    double primal_residual = 0.0;   // max constraint violation at solution
    double dual_residual = 0.0;     // KKT stationarity residual
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
    bool polished = false;
};

struct QpSettings {
    double tolerance = 1e-8;        // primal and dual absolute tolerance
    int max_iterations = 400000;
    double rho = 0.1;               // penalty, adapted during the run
    double sigma = 1e-6;
    double alpha = 1.6;             // over-relaxation
    bool polish = true;
    bool adaptive_rho = true;
    int check_interval = 25;
    double infeasibility_tolerance = 1e-9;
};

/// Euclidean projection of (g0, t0) onto {(g, t) : g^2 <= W * t}.
std::pair<double, double> project_parabola(double g0, double t0, double weymouth);

/// Reusable solver instance. Factorizations and equilibration survive
/// objective updates, so repeated solves with a new linear term (the
/// J-ADMM inner loop) are cheap. Not reentrant; distinct instances may run
/// on distinct threads.
class BlockSolver {
  public:
    BlockSolver(ConvexBlockProblem problem, QpSettings settings = {});
    ~BlockSolver();
    BlockSolver(BlockSolver&&) noexcept;
    BlockSolver& operator=(BlockSolver&&) noexcept;

    /// Replaces the linear objective term and constant; quadratic term and
    /// constraints are unchanged. Keeps warm-start state.
    void set_linear_term(const Vector& linear, double constant);
    void warm_start(const Vector& x);

    SolveReport solve();

    const ConvexBlockProblem& problem() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot convenience wrapper around BlockSolver.
SolveReport solve_block(const ConvexBlockProblem& p, const QpSettings& settings = {});

}  // namespace oef
