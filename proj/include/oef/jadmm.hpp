#pragma once

// Jacobi-Proximal ADMM for the multi-block compact form: parallel block
// updates with per-block proximal matrices P^r, damped multiplier step, and
// squared-norm stop criteria on the primal (coupling) and dual (iterate
// change) residuals.

#include "oef/partition.hpp"
#include "oef/qp.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace oef {

enum class IterationMode { Jacobi, GaussSeidel };

struct JadmmConfig {
    double d = 4.0;              // penalty parameter
    double gamma = 1.0;          // damping, in (0, 2)
    double p_factor = 1.1;       // multiplier on the minimal proximal matrix
    double eps_primal = 1e-4;    // threshold on ||sum A_r x^r - c||^2
    double eps_dual = 1e-4;      // threshold on max_r d ||x^r_{k+1} - x^r_k||^2
    int max_iterations = 1000;
    std::vector<double> eps_r;   // optional per-block overrides (sum < 2 - gamma)
    IterationMode mode = IterationMode::Jacobi;
    int threads = 0;             // 0 = hardware concurrency (Jacobi only)
    // Subproblem solver settings; tolerance 0 derives the default
    // 0.01 * min(eps_primal, eps_dual), two orders tighter than the
    // outer stop thresholds.
    QpSettings subproblem = unset_subproblem();

    void validate(int num_blocks) const;   // throws on violations
    double subproblem_tolerance() const;

  private:
    static QpSettings unset_subproblem() {
        QpSettings s;
        s.tolerance = 0.0;
        return s;
    }
};

struct IterateState {
    std::vector<Vector> block_x;
    Vector multiplier;
    int iteration = 0;
};

struct TraceRow {
    int k = 0;
    double primal_sq = 0.0;
    std::vector<double> dual_sq;
    double elapsed_ms = 0.0;
};

struct ResidualTrace {
    std::vector<TraceRow> rows;
    void write_csv(std::ostream& out) const;
};

enum class JadmmStatus { Converged, MaxIter, BlockInfeasible, BudgetExceeded };

std::string to_string(JadmmStatus s);

struct JadmmResult {
    IterateState state;
    ResidualTrace trace;
    JadmmStatus status = JadmmStatus::MaxIter;
    int iterations = 0;
    double objective = 0.0;        // sum of original block objectives
    std::string failed_block;      // set when a block is infeasible
};

/// P^r = p_factor * d * (N/(2-gamma) - 1) * A_r' A_r + sigma*I with
/// sigma = 1e-8*d, or the Eq.-(25) form when per-block eps_r are supplied.
std::vector<SparseMatrix> proximal_matrices(const CompactForm& cf, const JadmmConfig& cfg);

/// The block-r subproblem at the state's iterate: f_r plus the augmented
/// penalty around the other blocks' frozen contributions plus the proximal
/// term, expanded to an explicit quadratic.
ConvexBlockProblem block_subproblem(int r, const IterateState& state, const CompactForm& cf,
                                    const JadmmConfig& cfg, const SparseMatrix& proximal);

/// lambda_{k+1} = lambda_k - gamma * d * (sum_r A_r x_{k+1}^r - c).
Vector multiplier_update(const IterateState& state, const CompactForm& cf, const JadmmConfig& cfg,
                         const std::vector<Vector>& fresh_x);

struct StopCheck {
    bool stop = false;
    double primal_sq = 0.0;
    std::vector<double> dual_sq;
};

StopCheck check_stop(const CompactForm& cf, const JadmmConfig& cfg,
                     const std::vector<Vector>& fresh_x, const std::vector<Vector>& prev_x);

/// Runs Algorithm 1. Jacobi mode executes all block solves of an iteration
/// concurrently against the iteration-k snapshot and is bitwise
/// deterministic across thread counts. `budget` is polled once per
/// iteration; returning true stops the run with BudgetExceeded.
JadmmResult run_jadmm(const CompactForm& cf, const JadmmConfig& cfg,
                      const std::function<bool()>& budget = {});

}  // namespace oef
