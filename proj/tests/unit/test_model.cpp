#include "oef/model.hpp"

#include "oef/constraints.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace oef;

namespace {

IegsSystem three_node_gas() {
    IegsSystem sys;
    sys.gas_nodes = {{"g1", 1.0, 50.0}, {"g2", 1.0, 50.0}, {"g3", 1.0, 50.0}};
    sys.pipelines.push_back({"p1", "g1", "g2", 100.0, {}, {}, false});
    sys.pipelines.push_back({"p2", "g2", "g3", 100.0, {}, {}, false});
    sys.wells = {{"w1", "g1", 0.0, 100.0, 1.0}};
    sys.loads = {{"d1", "g3", LoadKind::Gas, 30.0}};
    return sys;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("validation flags dangling references") {
    IegsSystem sys = three_node_gas();
    sys.pipelines.push_back({"p99", "g1", "99", 10.0, {}, {}, false});
    ValidationReport rep = validate_system(sys);
    CHECK_FALSE(rep.ok());
    CHECK(rep.mentions("unresolved gas node 99"));
}

TEST_CASE("validation flags inverted bounds") {
    IegsSystem sys = three_node_gas();
    sys.wells.push_back({"w2", "g2", 5.0, 3.0, 1.0});
    ValidationReport rep = validate_system(sys);
    CHECK_FALSE(rep.ok());
    CHECK(rep.mentions("inverted or negative output bounds"));
}

TEST_CASE("well-formed fixtures pass validation") {
    CHECK(validate_system(three_node_gas()).ok());
    CHECK(validate_system(oef::test::minimal_power_fixture()).ok());
    CHECK(validate_system(oef::test::two_block_fixture()).ok());
    CHECK(validate_system(oef::test::four_block_fixture()).ok());
}

TEST_CASE("validation flags disconnected power networks") {
    IegsSystem sys = oef::test::minimal_power_fixture();
    sys.power_nodes.push_back({"n2", -0.5, 0.5, 0, false, {}});
    ValidationReport rep = validate_system(sys);
    CHECK(rep.mentions("not connected"));
}

TEST_CASE("weymouth residual arithmetic") {
    GasPipeline pipe{"p", "a", "b", 1.0, {}, {}, false};
    CHECK(weymouth_residual(pipe, 2.0, 5.0, 1.0) == doctest::Approx(0.0));
    CHECK(weymouth_residual(pipe, 2.0, 1.0, 5.0) == doctest::Approx(0.0));
    pipe.weymouth = 2.0;
    CHECK(weymouth_residual(pipe, 3.0, 2.0, 1.0) == doctest::Approx(7.0));
}

TEST_CASE("weymouth residual directional antisymmetry") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unit(0.1, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        GasPipeline pipe{"p", "a", "b", unit(rng), {}, {}, false};
        const double g = unit(rng) - 5.0;
        const double pi_i = unit(rng);
        const double pi_j = unit(rng);
        CHECK(weymouth_residual(pipe, g, pi_i, pi_j) ==
              doctest::Approx(-weymouth_residual(pipe, -g, pi_j, pi_i)).epsilon(1e-12));
    }
}

TEST_CASE("dc flow row by direct substitution") {
    IegsSystem sys;
    sys.power_nodes = {{"na", -0.5, 0.5, 0, false, {}}, {"nb", -0.5, 0.5, 0, false, {}}};
    sys.power_lines = {{"l1", "na", "nb", 0.1, 100.0, 0}};
    sys.coal_generators = {{"cg", "na", 0.0, 100.0, 0.0, 1.0, 0.0}};
    BuiltBlock built = power_block_constraints(sys, whole_power_view(sys));

    Vector x = Vector::Zero(built.problem.num_vars);
    x[built.vars.at("theta:na")] = 0.05;
    x[built.vars.at("theta:nb")] = 0.03;
    x[built.vars.at("flow:l1")] = 0.2;
    // theta difference 0.02 at x = 0.1 requires exactly p = 0.2
    const Vector resid = built.problem.eq * x - built.problem.eq_rhs;
    bool dc_row_satisfied = false;
    for (int i = 0; i < resid.size(); ++i)
        if (std::abs(resid[i]) < 1e-12) dc_row_satisfied = true;
    CHECK(dc_row_satisfied);

    x[built.vars.at("flow:l1")] = 0.3;
    const Vector resid2 = built.problem.eq * x - built.problem.eq_rhs;
    CHECK(resid2.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("single-node balance pins the generator") {
    IegsSystem sys = oef::test::minimal_power_fixture();
    BuiltBlock built = power_block_constraints(sys, whole_power_view(sys));
    ConvexBlockProblem p = built.problem;
    p.add_diagonal_regularization(1e-8);
    SolveReport rep = solve_block(p);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.solution[built.vars.at("p:cg1")] == doctest::Approx(40.0).epsilon(1e-7));
}

TEST_CASE("two-node block routes the load over the line") {
    IegsSystem sys;
    sys.power_nodes = {{"n1", -0.5, 0.5, 0, false, {}}, {"n2", -0.5, 0.5, 0, false, {}}};
    sys.power_lines = {{"l1", "n1", "n2", 0.002, 100.0, 0}};
    sys.coal_generators = {{"cg", "n1", 0.0, 100.0, 0.01, 10.0, 0.0}};
    sys.loads = {{"d", "n2", LoadKind::Power, 30.0}};
    BuiltBlock built = power_block_constraints(sys, whole_power_view(sys));
    ConvexBlockProblem p = built.problem;
    p.add_diagonal_regularization(1e-8);
    SolveReport rep = solve_block(p);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.solution[built.vars.at("flow:l1")] == doctest::Approx(30.0).epsilon(1e-7));

    PhysicalSolution sol = oef::test::to_solution(built, rep.solution);
    for (const auto& nr : balance_residuals(sys, sol))
        CHECK(std::abs(nr.residual) < 1e-6);
}

TEST_CASE("virtual nodes carry no balance row") {
    IegsSystem sys;
    sys.power_nodes = {{"n1", -0.5, 0.5, 0, false, {}},
                       {"n2", -0.5, 0.5, 0, false, {}},
                       {"n3~r0", -0.5, 0.5, 0, true, "n3"}};
    sys.power_lines = {{"l1", "n1", "n2", 0.002, 100.0, 0},
                       {"l2", "n2", "n3~r0", 0.002, 100.0, 0}};
    sys.coal_generators = {{"cg", "n1", 0.0, 100.0, 0.01, 10.0, 0.0}};
    PowerBlockView view;
    view.node_ids = {"n1", "n2", "n3~r0"};
    view.line_ids = {"l1", "l2"};
    view.coal_ids = {"cg"};
    BuiltBlock built = power_block_constraints(sys, view);
    // one DC row per line plus one balance row per actual node only
    CHECK(built.problem.eq.rows() == 2 + 2);
}

TEST_CASE("compressor row admits pressure up to the ratio") {
    IegsSystem sys;
    sys.gas_nodes = {{"gi", 0.0, 50.0}, {"gj", 0.0, 50.0}};
    sys.compressors = {{"c1", "gi", "gj", 1.44, 100.0}};
    sys.wells = {{"w1", "gi", 0.0, 100.0, 1.0}};
    BuiltBlock built = gas_block_constraints(sys, whole_gas_view(sys), {});

    Vector x = Vector::Zero(built.problem.num_vars);
    x[built.vars.at("pi:gi")] = 4.0;
    x[built.vars.at("pi:gj")] = 5.76;
    Vector row = built.problem.ineq * x - built.problem.ineq_rhs;
    CHECK(row.maxCoeff() <= 1e-12);
    x[built.vars.at("pi:gj")] = 5.77;
    row = built.problem.ineq * x - built.problem.ineq_rhs;
    CHECK(row.maxCoeff() > 1e-6);
}

TEST_CASE("one-row gas balance pins the pipeline flow") {
    IegsSystem sys;
    sys.gas_nodes = {{"g1", 1.0, 50.0}, {"g2", 1.0, 50.0}};
    sys.pipelines = {{"p1", "g1", "g2", 100.0, {}, {}, false}};
    sys.wells = {{"w1", "g1", 50.0, 50.0, 1.0}};   // output pinned to 50
    sys.loads = {{"d1", "g1", LoadKind::Gas, 30.0}};
    const auto relax = build_relaxations(sys);
    BuiltBlock built = gas_block_constraints(sys, whole_gas_view(sys), relax);
    ConvexBlockProblem p = built.problem;
    p.add_diagonal_regularization(1e-8);
    SolveReport rep = solve_block(p);
    REQUIRE(rep.status == SolveStatus::Optimal);
    CHECK(rep.solution[built.vars.at("pipe:p1")] == doctest::Approx(20.0).epsilon(1e-7));
}

TEST_CASE("virtual generator demand enters the gas balance") {
    IegsSystem sys;
    sys.gas_nodes = {{"g1", 1.0, 50.0}};
    sys.wells = {{"w1", "g1", 0.0, 100.0, 1.0}};
    GasFiredGenerator vg{"gg1~g", "", "g1", 10.0, 10.0, 2.0, true, "gg1"};
    sys.gas_generators = {vg};
    GasBlockView view = whole_gas_view(sys);
    view.gens_are_virtual = true;
    view.gen_ids = {"gg1~g"};
    BuiltBlock built = gas_block_constraints(sys, view, {});
    ConvexBlockProblem p = built.problem;
    p.add_diagonal_regularization(1e-8);
    SolveReport rep = solve_block(p);
    REQUIRE(rep.status == SolveStatus::Optimal);
    // output pinned to 10 MW at chi = 2 -> 20 Sm3/h of extra demand
    CHECK(rep.solution[built.vars.at("w:w1")] == doctest::Approx(20.0).epsilon(1e-7));
}

TEST_CASE("missing relaxation names the pipeline") {
    IegsSystem sys = three_node_gas();
    CHECK_THROWS_WITH_AS(gas_block_constraints(sys, whole_gas_view(sys), {}),
                         doctest::Contains("p1"), std::invalid_argument);
}

TEST_CASE("inverted generator bounds are rejected at build time") {
    IegsSystem sys = oef::test::minimal_power_fixture();
    sys.coal_generators[0].p_min = 50.0;
    sys.coal_generators[0].p_max = 10.0;
    CHECK_THROWS_AS(power_block_constraints(sys, whole_power_view(sys)), std::invalid_argument);
}

TEST_CASE("quadratic costs are midpoint-convex") {
    IegsSystem sys = oef::test::two_block_fixture();
    BuiltBlock built = power_block_constraints(sys, whole_power_view(sys));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unit(-100.0, 100.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vector a(built.problem.num_vars), b(built.problem.num_vars);
        for (int j = 0; j < a.size(); ++j) {
            a[j] = unit(rng);
            b[j] = unit(rng);
        }
        const double mid = built.problem.objective_value(0.5 * (a + b));
        const double avg =
            0.5 * (built.problem.objective_value(a) + built.problem.objective_value(b));
        CHECK(mid <= avg + 1e-9 * std::max(1.0, std::abs(avg)));
    }
}

TEST_CASE("balance residuals report signed imbalance") {
    IegsSystem sys = oef::test::minimal_power_fixture();
    PhysicalSolution sol;
    sol.set("p:cg1", 40.0);
    auto residuals = balance_residuals(sys, sol);
    REQUIRE(residuals.size() == 1);
    CHECK(residuals[0].residual == doctest::Approx(0.0));

    sys.loads[0].amount = 45.0;   // overload by +5 MW
    residuals = balance_residuals(sys, sol);
    CHECK(residuals[0].residual == doctest::Approx(-5.0));
}

}  // TEST_SUITE
