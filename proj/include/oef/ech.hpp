#pragma once

// Extended convex hull of the signed Weymouth curve
//   g = sgn(dpi) * sqrt(W * |dpi|),   dpi = pi_i - pi_j
// restricted to the pressure-square difference range implied by the node
// bounds. Three geometric cases arise:
//
//   General          : dpi range straddles zero. The ECH is the band between
//                      two parallel lines at the secant slope, plus flow
//                      bounds at the range endpoints.
//   DirectedTouching : dpi range starts at zero (or the flow direction is
//                      fixed). The ECH equals the convex hull: the chord of
//                      the curve from below, the curve itself (a parabolic
//                      region in dpi) from above.
//   DirectedPositive : dpi range strictly positive; same construction with a
//                      nonzero left endpoint.

#include "oef/model.hpp"

namespace oef {

enum class EchCase { General, DirectedTouching, DirectedPositive };

std::string to_string(EchCase c);

struct EchConstraintSet {
    EchCase kind = EchCase::General;
    double g_min = 0.0;        // flow bounds (Sm3/h)
    double g_max = 0.0;
    double a_lower = 0.0;      // left/lower line: g >= a_lower * dpi + b_lower
    double b_lower = 0.0;
    double a_upper = 0.0;      // right line (General only): g <= a_upper * dpi + b_upper
    double b_upper = 0.0;
    bool has_parabolic_cap = false;   // g^2 <= W * dpi (Directed cases)
    double weymouth = 0.0;
    double dpi_lo = 0.0;       // dpi range endpoints (bar^2)
    double dpi_hi = 0.0;
};

struct CaseDecision {
    EchCase kind = EchCase::General;
    double dpi_lo = 0.0;
    double dpi_hi = 0.0;
};

/// Classifies a pipeline from its endpoint pressure bounds:
/// dpi_lo = pi_i^min - pi_j^max, dpi_hi = pi_i^max - pi_j^min.
/// Throws when the dpi range is degenerate or the implied flow direction is
/// reversed (flip the pipeline orientation in the data instead).
CaseDecision classify_case(const GasPipeline& pipe, const GasNode& from, const GasNode& to,
                           bool fixed_direction);

/// General case: parallel secant-slope lines with extremal offsets
/// (tangency dpi = +-W/(4 s^2) when interior, range endpoint otherwise).
EchConstraintSet build_general_ech(const GasPipeline& pipe, double dpi_lo, double dpi_hi);

/// Directed cases: chord of the curve from (dpi_lo, sqrt(W dpi_lo)) to
/// (dpi_hi, sqrt(W dpi_hi)) plus the parabolic cap g^2 <= W * dpi.
EchConstraintSet build_directed_ech(const GasPipeline& pipe, double dpi_lo, double dpi_hi);

/// classify_case followed by the matching builder, with user flow caps from
/// the pipeline applied.
EchConstraintSet build_ech(const GasPipeline& pipe, const GasNode& from, const GasNode& to);

struct ContainmentCheck {
    bool contained = false;
    double worst_violation = 0.0;
};

/// True iff (g, dpi) satisfies every row of the set within 1e-9.
ContainmentCheck ech_contains(const EchConstraintSet& set, double g, double dpi);

/// Signed Weymouth curve value at a pressure-square difference.
double weymouth_curve(double weymouth, double dpi);

/// Relaxations for every passive pipeline of the system, keyed by pipeline
/// id. Throws on classification failures, naming the pipeline.
std::map<std::string, EchConstraintSet> build_relaxations(const IegsSystem& sys);

}  // namespace oef
