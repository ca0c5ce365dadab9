#include "oef/ech.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oef {

std::string to_string(EchCase c) {
    switch (c) {
        case EchCase::General: return "general";
        case EchCase::DirectedTouching: return "directed-touching";
        case EchCase::DirectedPositive: return "directed-positive";
    }
    return "unknown";
}

double weymouth_curve(double weymouth, double dpi) {
    const double s = dpi >= 0.0 ? 1.0 : -1.0;
    return s * std::sqrt(weymouth * std::abs(dpi));
}

CaseDecision classify_case(const GasPipeline& pipe, const GasNode& from, const GasNode& to,
                           bool fixed_direction) {
    CaseDecision d;
    d.dpi_lo = from.pi_min - to.pi_max;
    d.dpi_hi = from.pi_max - to.pi_min;
    if (d.dpi_hi <= d.dpi_lo)
        throw std::invalid_argument("pipeline " + pipe.id + ": degenerate pressure ranges");
    if (d.dpi_hi <= 0.0)
        throw std::invalid_argument("pipeline " + pipe.id +
                                    ": pressure bounds force reverse flow; flip the pipeline orientation");
    if (d.dpi_lo > 0.0) {
        d.kind = EchCase::DirectedPositive;
    } else if (d.dpi_lo == 0.0 || fixed_direction) {
        d.kind = EchCase::DirectedTouching;
        d.dpi_lo = 0.0;
    } else {
        d.kind = EchCase::General;
    }
    return d;
}

namespace {

// A binding user flow cap narrows the dpi range the curve can actually
// reach; all relaxation constants are computed on the narrowed range so the
// set stays tight around the cap-feasible part of the curve.
void narrow_range_by_caps(const GasPipeline& pipe, double& dpi_lo, double& dpi_hi) {
    const double w = pipe.weymouth;
    if (pipe.g_cap_max && *pipe.g_cap_max >= 0.0 && weymouth_curve(w, dpi_hi) > *pipe.g_cap_max)
        dpi_hi = (*pipe.g_cap_max) * (*pipe.g_cap_max) / w;
    if (pipe.g_cap_min && *pipe.g_cap_min <= 0.0 && weymouth_curve(w, dpi_lo) < *pipe.g_cap_min)
        dpi_lo = -(*pipe.g_cap_min) * (*pipe.g_cap_min) / w;
    if (dpi_hi <= dpi_lo)
        throw std::invalid_argument("pipeline " + pipe.id + ": flow caps leave an empty dpi range");
}

}  // namespace

EchConstraintSet build_general_ech(const GasPipeline& pipe, double dpi_lo, double dpi_hi) {
    if (pipe.weymouth <= 0.0)
        throw std::invalid_argument("pipeline " + pipe.id + ": non-positive Weymouth constant");
    if (!(dpi_lo < 0.0 && 0.0 < dpi_hi))
        throw std::invalid_argument("pipeline " + pipe.id + ": general ECH needs dpi_lo < 0 < dpi_hi");
    narrow_range_by_caps(pipe, dpi_lo, dpi_hi);

    const double w = pipe.weymouth;
    EchConstraintSet set;
    set.kind = EchCase::General;
    set.weymouth = w;
    set.dpi_lo = dpi_lo;
    set.dpi_hi = dpi_hi;
    set.g_max = std::sqrt(w * dpi_hi);
    set.g_min = -std::sqrt(w * (-dpi_lo));

    // Secant slope between the curve endpoints.
    const double s = (set.g_max - set.g_min) / (dpi_hi - dpi_lo);
    set.a_lower = s;
    set.a_upper = s;

    // Offsets: extremal gap between curve and secant line. Candidates are
    // the interior tangency points dpi = +-W/(4 s^2) and the range endpoints.
    auto gap = [&](double dpi) { return weymouth_curve(w, dpi) - s * dpi; };
    const double dpi_t = w / (4.0 * s * s);
    double b_up = std::max(gap(dpi_lo), gap(dpi_hi));
    double b_lo = std::min(gap(dpi_lo), gap(dpi_hi));
    if (dpi_t <= dpi_hi) b_up = std::max(b_up, gap(dpi_t));
    if (-dpi_t >= dpi_lo) b_lo = std::min(b_lo, gap(-dpi_t));
    set.b_upper = b_up;
    set.b_lower = b_lo;
    return set;
}

EchConstraintSet build_directed_ech(const GasPipeline& pipe, double dpi_lo, double dpi_hi) {
    if (pipe.weymouth <= 0.0)
        throw std::invalid_argument("pipeline " + pipe.id + ": non-positive Weymouth constant");
    if (dpi_lo < 0.0)
        throw std::invalid_argument("pipeline " + pipe.id + ": directed ECH needs dpi_lo >= 0");
    if (dpi_hi <= dpi_lo)
        throw std::invalid_argument("pipeline " + pipe.id + ": degenerate pressure ranges");
    narrow_range_by_caps(pipe, dpi_lo, dpi_hi);

    const double w = pipe.weymouth;
    EchConstraintSet set;
    set.kind = dpi_lo > 0.0 ? EchCase::DirectedPositive : EchCase::DirectedTouching;
    set.weymouth = w;
    set.dpi_lo = dpi_lo;
    set.dpi_hi = dpi_hi;
    set.g_min = std::sqrt(w * dpi_lo);
    set.g_max = std::sqrt(w * dpi_hi);

    // Chord of the curve between the range endpoints bounds the hull from
    // below; the curve itself (as the parabolic region g^2 <= W dpi) bounds
    // it from above.
    set.a_lower = (set.g_max - set.g_min) / (dpi_hi - dpi_lo);
    set.b_lower = set.g_min - set.a_lower * dpi_lo;
    set.has_parabolic_cap = true;
    return set;
}

EchConstraintSet build_ech(const GasPipeline& pipe, const GasNode& from, const GasNode& to) {
    const CaseDecision d = classify_case(pipe, from, to, pipe.fixed_direction);
    if (d.kind == EchCase::General) return build_general_ech(pipe, d.dpi_lo, d.dpi_hi);
    return build_directed_ech(pipe, d.dpi_lo, d.dpi_hi);
}

ContainmentCheck ech_contains(const EchConstraintSet& set, double g, double dpi) {
    constexpr double tol = 1e-9;
    double worst = 0.0;
    auto track = [&](double violation) { worst = std::max(worst, violation); };
    track(set.g_min - g);
    track(g - set.g_max);
    track(set.a_lower * dpi + set.b_lower - g);
    if (set.kind == EchCase::General) track(g - (set.a_upper * dpi + set.b_upper));
    if (set.has_parabolic_cap) track(g * g - set.weymouth * dpi);
    return {worst <= tol, worst};
}

std::map<std::string, EchConstraintSet> build_relaxations(const IegsSystem& sys) {
    std::map<std::string, EchConstraintSet> out;
    for (const auto& pipe : sys.pipelines) {
        const GasNode* from = sys.find_gas_node(pipe.from_node);
        const GasNode* to = sys.find_gas_node(pipe.to_node);
        if (!from || !to)
            throw std::invalid_argument("pipeline " + pipe.id + ": unresolved endpoint");
        out.emplace(pipe.id, build_ech(pipe, *from, *to));
    }
    return out;
}

}  // namespace oef
