#pragma once

// Feasibility check and solution recovery for the convexified optimum: fix
// the pipeline flows g*, re-solve the nodal pressure squares through a slack
// LP, and declare the convexified optimum exact when the minimal total slack
// is zero (then swapping in the recovered pressures yields a feasible
// optimal solution of the original nonconvex problem).

#include "oef/constraints.hpp"
#include "oef/model.hpp"
#include "oef/qp.hpp"

#include <map>
#include <string>

namespace oef {

struct RecoveryProblem {
    ConvexBlockProblem lp;
    VariableMap vars;            // pi:<node>, dp:<node>, dm:<node>
    std::vector<std::string> node_ids;
    double bound_scale = 1.0;    // mean upper pressure bound, used by the zero test
};

enum class RecoveryStatus { Recovered, SlackPositive, Infeasible };

std::string to_string(RecoveryStatus s);

struct RecoveryOutcome {
    RecoveryStatus status = RecoveryStatus::Infeasible;
    double objective = 0.0;                           // total slack of the LP
    std::map<std::string, double> pressure_squares;   // pi** when the LP is feasible
    std::map<std::string, double> slack_upper;        // delta+ per node
    std::map<std::string, double> slack_lower;        // delta- per node
    std::string note;
};

/// The slack LP: pressure differences pinned to sgn(g*) (g*)^2 / W per
/// pipeline, node bounds relaxed multiplicatively (additively, scaled by the
/// mean positive bound, for nodes whose lower bound is zero), compressor
/// rows kept hard.
RecoveryProblem build_recovery_lp(const IegsSystem& sys,
                                  const std::map<std::string, double>& pipe_flows);

/// Solves the slack LP for the pipeline flows of a convexified solution.
/// Zero objective (within 1e-6 of the mean node bound) means the original
/// and convexified optima coincide and the returned pressures certify it;
/// a positive objective quantifies the infeasibility; an infeasible LP
/// leaves the convexified optimum as a strict lower bound.
RecoveryOutcome check_and_recover(const PhysicalSolution& convexified, const IegsSystem& sys);

/// Applies a recovery outcome to a convexified solution (pressure squares
/// replaced, everything else kept).
PhysicalSolution apply_recovery(const PhysicalSolution& convexified, const RecoveryOutcome& outcome);

struct VerifyViolation {
    std::string what;
    double violation = 0.0;
};

struct VerifyReport {
    bool pass = false;
    double max_violation = 0.0;
    std::vector<VerifyViolation> violations;   // entries above tolerance
};

/// Checks every constraint of the original nonconvex problem — bounds, DC
/// rows, balances, the exact signed Weymouth equation, compressor rows and
/// the virtual/actual couplings — at the given relative tolerance.
VerifyReport verify_original(const PhysicalSolution& sol, const IegsSystem& sys, double tol = 1e-6);

}  // namespace oef
