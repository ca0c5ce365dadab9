#include "oef/ech.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace oef;

namespace {

GasPipeline pipe_w(double w) { return {"p", "gi", "gj", w, {}, {}, false}; }

// Samples the signed curve across the set's dpi range and reports the worst
// containment violation.
double worst_curve_violation(const EchConstraintSet& set, int samples = 10000) {
    double worst = 0.0;
    for (int k = 0; k <= samples; ++k) {
        const double dpi = set.dpi_lo + (set.dpi_hi - set.dpi_lo) * k / samples;
        const double g = weymouth_curve(set.weymouth, dpi);
        worst = std::max(worst, ech_contains(set, g, dpi).worst_violation);
    }
    return worst;
}

}  // namespace

TEST_SUITE("ech") {

TEST_CASE("case classification from pressure boxes") {
    GasPipeline p = pipe_w(1.0);
    CaseDecision d = classify_case(p, {"gi", 1.0, 5.0}, {"gj", 1.0, 5.0}, false);
    CHECK(d.kind == EchCase::General);
    CHECK(d.dpi_lo == doctest::Approx(-4.0));
    CHECK(d.dpi_hi == doctest::Approx(4.0));

    d = classify_case(p, {"gi", 3.0, 5.0}, {"gj", 1.0, 3.0}, false);
    CHECK(d.kind == EchCase::DirectedTouching);
    CHECK(d.dpi_lo == doctest::Approx(0.0));
    CHECK(d.dpi_hi == doctest::Approx(4.0));

    d = classify_case(p, {"gi", 4.0, 6.0}, {"gj", 1.0, 3.0}, false);
    CHECK(d.kind == EchCase::DirectedPositive);
    CHECK(d.dpi_lo == doctest::Approx(1.0));
    CHECK(d.dpi_hi == doctest::Approx(5.0));
}

TEST_CASE("fixed direction clamps the range to touching") {
    GasPipeline p = pipe_w(1.0);
    CaseDecision d = classify_case(p, {"gi", 1.0, 5.0}, {"gj", 1.0, 5.0}, true);
    CHECK(d.kind == EchCase::DirectedTouching);
    CHECK(d.dpi_lo == doctest::Approx(0.0));
    CHECK(d.dpi_hi == doctest::Approx(4.0));
}

TEST_CASE("degenerate pressure ranges are rejected") {
    GasPipeline p = pipe_w(1.0);
    CHECK_THROWS_AS(classify_case(p, {"gi", 2.0, 2.0}, {"gj", 2.0, 2.0}, false),
                    std::invalid_argument);
    CHECK_THROWS_AS(classify_case(p, {"gi", 1.0, 2.0}, {"gj", 5.0, 9.0}, false),
                    std::invalid_argument);
}

TEST_CASE("general case, symmetric range") {
    EchConstraintSet set = build_general_ech(pipe_w(1.0), -4.0, 4.0);
    CHECK(set.g_min == doctest::Approx(-2.0));
    CHECK(set.g_max == doctest::Approx(2.0));
    CHECK(set.a_lower == doctest::Approx(0.5));
    CHECK(set.a_upper == doctest::Approx(0.5));
    CHECK(set.b_upper == doctest::Approx(0.5));
    CHECK(set.b_lower == doctest::Approx(-0.5));
    CHECK_FALSE(set.has_parabolic_cap);
    CHECK(worst_curve_violation(set) <= 1e-9);
}

TEST_CASE("general case, asymmetric range") {
    EchConstraintSet set = build_general_ech(pipe_w(1.0), -1.0, 9.0);
    CHECK(set.g_min == doctest::Approx(-1.0));
    CHECK(set.g_max == doctest::Approx(3.0));
    CHECK(set.a_lower == doctest::Approx(0.4));
    // right tangency at dpi = 1/(4*0.16) = 1.5625 inside the range
    CHECK(set.b_upper == doctest::Approx(0.625));
    // left tangency at -1.5625 is outside; endpoint gap -0.6 rules
    CHECK(set.b_lower == doctest::Approx(-0.6));
    CHECK(worst_curve_violation(set) <= 1e-9);
}

TEST_CASE("non-positive weymouth constant is rejected") {
    CHECK_THROWS_AS(build_general_ech(pipe_w(0.0), -4.0, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(build_directed_ech(pipe_w(0.0), 0.0, 4.0), std::invalid_argument);
}

TEST_CASE("directed case from zero") {
    EchConstraintSet set = build_directed_ech(pipe_w(1.0), 0.0, 4.0);
    CHECK(set.kind == EchCase::DirectedTouching);
    CHECK(set.g_min == doctest::Approx(0.0));
    CHECK(set.g_max == doctest::Approx(2.0));
    CHECK(set.a_lower == doctest::Approx(0.5));
    CHECK(set.b_lower == doctest::Approx(0.0));
    CHECK(set.has_parabolic_cap);
    CHECK(worst_curve_violation(set) <= 1e-9);
}

TEST_CASE("directed case with positive left endpoint") {
    EchConstraintSet set = build_directed_ech(pipe_w(1.0), 1.0, 4.0);
    CHECK(set.kind == EchCase::DirectedPositive);
    CHECK(set.g_min == doctest::Approx(1.0));
    CHECK(set.g_max == doctest::Approx(2.0));
    // chord through (1, 1) and (4, 2)
    CHECK(set.a_lower == doctest::Approx(1.0 / 3.0));
    CHECK(set.b_lower == doctest::Approx(2.0 / 3.0));
    CHECK(worst_curve_violation(set) <= 1e-9);
}

TEST_CASE("curve point saturates the parabolic cap") {
    EchConstraintSet set = build_directed_ech(pipe_w(1.0), 0.0, 4.0);
    auto check = ech_contains(set, 1.5, 2.25);
    CHECK(check.contained);
    // cap tight: g^2 - W dpi = 0 exactly
    CHECK(1.5 * 1.5 - set.weymouth * 2.25 == doctest::Approx(0.0));
}

TEST_CASE("directed builder rejects a negative left endpoint") {
    CHECK_THROWS_AS(build_directed_ech(pipe_w(1.0), -0.5, 4.0), std::invalid_argument);
}

TEST_CASE("containment predicate examples") {
    EchConstraintSet general = build_general_ech(pipe_w(1.0), -4.0, 4.0);
    CHECK(ech_contains(general, 0.0, 0.0).contained);
    auto outside = ech_contains(general, 2.0, -4.0);
    CHECK_FALSE(outside.contained);
    // right bound at dpi = -4 is 0.5*(-4) + 0.5 = -1.5, so g = 2 violates by 3.5
    CHECK(outside.worst_violation == doctest::Approx(3.5));

    EchConstraintSet directed = build_directed_ech(pipe_w(1.0), 0.0, 4.0);
    CHECK_FALSE(ech_contains(directed, 1.0, 4.0).contained);   // chord requires g >= 2
}

TEST_CASE("general lines stay exactly parallel") {
    std::mt19937 rng(314);
    std::uniform_real_distribution<double> wdist(0.1, 10.0);
    std::uniform_real_distribution<double> unit(0.2, 30.0);
    for (int trial = 0; trial < 50; ++trial) {
        EchConstraintSet set = build_general_ech(pipe_w(wdist(rng)), -unit(rng), unit(rng));
        CHECK(set.a_lower == set.a_upper);
    }
}

TEST_CASE("flow bounds equal curve values at range endpoints") {
    std::mt19937 rng(141);
    std::uniform_real_distribution<double> wdist(0.1, 10.0);
    std::uniform_real_distribution<double> unit(0.2, 30.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double w = wdist(rng);
        const double lo = -unit(rng), hi = unit(rng);
        EchConstraintSet set = build_general_ech(pipe_w(w), lo, hi);
        CHECK(set.g_max == doctest::Approx(weymouth_curve(w, hi)).epsilon(1e-12));
        CHECK(set.g_min == doctest::Approx(weymouth_curve(w, lo)).epsilon(1e-12));
    }
}

TEST_CASE("binding user caps narrow the set tightly") {
    GasPipeline pipe = pipe_w(1.0);
    pipe.g_cap_min = -1.0;
    pipe.g_cap_max = 1.5;
    EchConstraintSet set = build_general_ech(pipe, -4.0, 4.0);
    CHECK(set.g_max == doctest::Approx(1.5));
    CHECK(set.g_min == doctest::Approx(-1.0));
    CHECK(set.dpi_hi == doctest::Approx(2.25));
    CHECK(set.dpi_lo == doctest::Approx(-1.0));
    CHECK(worst_curve_violation(set) <= 1e-9);
}

TEST_CASE("sampled containment across random pipelines") {
    std::mt19937 rng(2718);
    std::uniform_real_distribution<double> wdist(0.1, 10.0);
    std::uniform_real_distribution<double> bound(0.5, 40.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double w = wdist(rng);
        GasNode from{"gi", bound(rng), 0.0};
        from.pi_max = from.pi_min + bound(rng);
        GasNode to{"gj", bound(rng), 0.0};
        to.pi_max = to.pi_min + bound(rng);
        GasPipeline pipe = pipe_w(w);
        CaseDecision d;
        try {
            d = classify_case(pipe, from, to, false);
        } catch (const std::invalid_argument&) {
            continue;   // reverse-directed draw
        }
        EchConstraintSet set = d.kind == EchCase::General
                                   ? build_general_ech(pipe, d.dpi_lo, d.dpi_hi)
                                   : build_directed_ech(pipe, d.dpi_lo, d.dpi_hi);
        CHECK(worst_curve_violation(set, 2000) <= 1e-9);
    }
}

TEST_CASE("directed hull touches the chord only at the endpoints") {
    EchConstraintSet set = build_directed_ech(pipe_w(2.0), 1.0, 9.0);
    // interior curve points sit strictly above the chord
    double min_gap = std::numeric_limits<double>::infinity();
    for (int k = 1; k < 1000; ++k) {
        const double dpi = set.dpi_lo + (set.dpi_hi - set.dpi_lo) * k / 1000.0;
        const double gap = weymouth_curve(set.weymouth, dpi) - (set.a_lower * dpi + set.b_lower);
        min_gap = std::min(min_gap, gap);
    }
    CHECK(min_gap > 0.0);
    // and the chord meets the cap exactly at both endpoints
    for (double dpi : {set.dpi_lo, set.dpi_hi}) {
        const double g = set.a_lower * dpi + set.b_lower;
        CHECK(g * g == doctest::Approx(set.weymouth * dpi).epsilon(1e-12));
    }
}

}  // TEST_SUITE
