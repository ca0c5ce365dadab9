#include "oef/jadmm.hpp"

#include "oef/central.hpp"
#include "oef/ech.hpp"
#include "oef/io.hpp"
#include "support/fixtures.hpp"

#include <doctest.h>

#include <random>

using namespace oef;

namespace {

BlockModel scalar_block(const std::string& name, double target, double coupling_sign,
                        int num_rows, int row) {
    // f(x) = (x - target)^2 over the box [-10, 10]
    BlockModel b;
    b.name = name;
    b.problem = ConvexBlockProblem::make(1);
    std::vector<Triplet> q{{0, 0, 2.0}};
    b.problem.quadratic.setFromTriplets(q.begin(), q.end());
    b.problem.linear[0] = -2.0 * target;
    b.problem.constant = target * target;
    b.problem.lower[0] = -10.0;
    b.problem.upper[0] = 10.0;
    b.vars.add("x:" + name);
    b.coupling.resize(num_rows, 1);
    if (coupling_sign != 0.0) {
        std::vector<Triplet> t{{row, 0, coupling_sign}};
        b.coupling.setFromTriplets(t.begin(), t.end());
    }
    return b;
}

// Two scalar blocks tied by y - x = 0: optimum x = y = 2, multiplier -2.
CompactForm toy_consensus() {
    CompactForm cf;
    cf.blocks.push_back(scalar_block("x", 1.0, -1.0, 1, 0));
    cf.blocks.push_back(scalar_block("y", 3.0, 1.0, 1, 0));
    cf.num_rows = 1;
    cf.rhs = Vector::Zero(1);
    return cf;
}

// Chain of three scalar blocks: x = y and y = z.
CompactForm toy_chain3() {
    CompactForm cf;
    cf.num_rows = 2;
    cf.rhs = Vector::Zero(2);
    BlockModel bx = scalar_block("x", 1.0, 0.0, 2, 0);
    std::vector<Triplet> tx{{0, 0, 1.0}};
    bx.coupling.setFromTriplets(tx.begin(), tx.end());
    BlockModel by = scalar_block("y", 3.0, 0.0, 2, 0);
    std::vector<Triplet> ty{{0, 0, -1.0}, {1, 0, 1.0}};
    by.coupling.setFromTriplets(ty.begin(), ty.end());
    BlockModel bz = scalar_block("z", 5.0, 0.0, 2, 0);
    std::vector<Triplet> tz{{1, 0, -1.0}};
    bz.coupling.setFromTriplets(tz.begin(), tz.end());
    cf.blocks = {bx, by, bz};
    return cf;
}

CompactForm fixture_compact(const IegsSystem& sys) {
    BlockPartition part = decouple(sys, region_map(sys));
    auto couplings = coupling_constraints(part);
    return assemble_compact(part, couplings, default_scaling(part, couplings),
                            build_relaxations(sys));
}

}  // namespace

TEST_SUITE("jadmm") {

TEST_CASE("proximal matrices from the simplified condition") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;   // d = 4, gamma = 1, p_factor = 1.1
    auto P = proximal_matrices(cf, cfg);
    REQUIRE(P.size() == 2);
    // N/(2-gamma) - 1 = 1, so P = 1.1 * 4 * A'A = 4.4 plus the tiny floor
    CHECK(P[0].coeff(0, 0) == doctest::Approx(4.4).epsilon(1e-6));
    CHECK(P[1].coeff(0, 0) == doctest::Approx(4.4).epsilon(1e-6));

    JadmmConfig four;
    four.d = 1.0;
    four.gamma = 0.2;
    CompactForm chain = toy_chain3();
    chain.blocks.push_back(scalar_block("w", 0.0, 0.0, 2, 0));   // N = 4
    auto P4 = proximal_matrices(chain, four);
    // 4/1.8 - 1 = 1.2222..., times 1.1 = 1.344444...
    CHECK(P4[0].coeff(0, 0) == doctest::Approx(1.1 * (4.0 / 1.8 - 1.0)).epsilon(1e-9));
    // the block with a zero coupling column gets only the sigma floor
    CHECK(P4[3].coeff(0, 0) == doctest::Approx(1e-8 * four.d));
}

TEST_CASE("gamma at or above 2 is rejected") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;
    cfg.gamma = 2.0;
    CHECK_THROWS_AS(proximal_matrices(cf, cfg), std::invalid_argument);
    cfg.gamma = 1.0;
    cfg.eps_r = {1.0, 0.5};   // sum >= 2 - gamma
    CHECK_THROWS_AS(cfg.validate(2), std::invalid_argument);
}

TEST_CASE("block subproblem expands to the augmented quadratic") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;   // d = 4, lambda = 0
    auto P = proximal_matrices(cf, cfg);
    IterateState state;
    state.block_x = {Vector::Zero(1), Vector::Zero(1)};
    state.multiplier = Vector::Zero(1);

    ConvexBlockProblem sub = block_subproblem(0, state, cf, cfg, P[0]);
    // (x-1)^2 + 2x^2 + 2.2x^2: quadratic 10.4 (as 1/2 x'Qx), linear -2, constant 1
    CHECK(sub.quadratic.coeff(0, 0) == doctest::Approx(10.4).epsilon(1e-6));
    CHECK(sub.linear[0] == doctest::Approx(-2.0));
    CHECK(sub.constant == doctest::Approx(1.0));
    CHECK(sub.strictly_convex);

    // finite-difference check of the assembled gradient
    for (double x : {-1.0, 0.3, 2.5}) {
        Vector v = Vector::Constant(1, x);
        const double h = 1e-6;
        Vector vp = Vector::Constant(1, x + h), vm = Vector::Constant(1, x - h);
        const double fd = (sub.objective_value(vp) - sub.objective_value(vm)) / (2.0 * h);
        const double analytic = sub.quadratic.coeff(0, 0) * x + sub.linear[0];
        CHECK(fd == doctest::Approx(analytic).epsilon(1e-4));
    }
}

TEST_CASE("matched multiplier cancels the augmented linear term") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;
    auto P = proximal_matrices(cf, cfg);
    IterateState state;
    state.block_x = {Vector::Zero(1), Vector::Constant(1, 0.7)};
    // lambda = d * (sum_{j != r} A_j x_k^j - c) for block r = 0
    state.multiplier = cfg.d * (cf.blocks[1].coupling * state.block_x[1] - cf.rhs);
    ConvexBlockProblem sub = block_subproblem(0, state, cf, cfg, P[0]);
    // augmented term contributes no linear part; proximal at x_k = 0 adds none
    CHECK(sub.linear[0] == doctest::Approx(cf.blocks[0].problem.linear[0]).epsilon(1e-12));
}

TEST_CASE("multiplier update arithmetic") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;   // gamma = 1, d = 4
    IterateState state;
    state.multiplier = Vector::Constant(1, 1.5);

    // zero residual: x = y keeps lambda unchanged
    std::vector<Vector> balanced{Vector::Constant(1, 2.0), Vector::Constant(1, 2.0)};
    CHECK(multiplier_update(state, cf, cfg, balanced)[0] == doctest::Approx(1.5));

    // residual 0.5 decreases lambda by gamma*d*0.5 = 2
    std::vector<Vector> off{Vector::Constant(1, 2.0), Vector::Constant(1, 2.5)};
    CHECK(multiplier_update(state, cf, cfg, off)[0] == doctest::Approx(-0.5));
}

TEST_CASE("stop test is a conjunction") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;
    std::vector<Vector> prev{Vector::Constant(1, 2.0), Vector::Constant(1, 2.0)};

    StopCheck both = check_stop(cf, cfg, prev, prev);
    CHECK(both.stop);
    CHECK(both.primal_sq == doctest::Approx(0.0));

    // dual residual above threshold blocks the stop even with a tiny primal
    std::vector<Vector> fresh{Vector::Constant(1, 2.01), Vector::Constant(1, 2.01)};
    StopCheck moving = check_stop(cf, cfg, fresh, prev);
    CHECK(moving.primal_sq <= cfg.eps_primal);
    CHECK(moving.dual_sq[0] == doctest::Approx(4.0e-4).epsilon(1e-9));
    CHECK_FALSE(moving.stop);
}

TEST_CASE("toy consensus reaches the analytic optimum and dual") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;
    cfg.eps_primal = 1e-8;
    cfg.eps_dual = 1e-8;
    JadmmResult res = run_jadmm(cf, cfg);
    REQUIRE(res.status == JadmmStatus::Converged);
    CHECK(res.state.block_x[0][0] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(res.state.block_x[1][0] == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-3));
    // with the row oriented y - x, stationarity gives lambda = -2(x*-1) = -2
    CHECK(res.state.multiplier[0] == doctest::Approx(-2.0).epsilon(1e-2));
    CHECK(res.trace.rows.size() == static_cast<size_t>(res.iterations));
}

TEST_CASE("decoupled blocks converge in one iteration") {
    CompactForm cf;
    cf.blocks.push_back(scalar_block("x", 1.0, 0.0, 0, 0));
    cf.blocks.push_back(scalar_block("y", 3.0, 0.0, 0, 0));
    cf.num_rows = 0;
    cf.rhs = Vector::Zero(0);
    JadmmResult res = run_jadmm(cf, JadmmConfig{});
    REQUIRE(res.status == JadmmStatus::Converged);
    CHECK(res.iterations == 1);
    CHECK(res.trace.rows.size() == 1);
    CHECK(res.trace.rows[0].primal_sq == 0.0);
    CHECK(res.state.block_x[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(res.state.block_x[1][0] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("gauss-seidel needs no more iterations than jacobi on the toy") {
    CompactForm cf = toy_consensus();
    JadmmConfig jac;
    JadmmResult rj = run_jadmm(cf, jac);
    JadmmConfig gs = jac;
    gs.mode = IterationMode::GaussSeidel;
    JadmmResult rg = run_jadmm(cf, gs);
    REQUIRE(rj.status == JadmmStatus::Converged);
    REQUIRE(rg.status == JadmmStatus::Converged);
    CHECK(rg.iterations <= rj.iterations);
}

TEST_CASE("jacobi iterates are bitwise identical across thread counts") {
    CompactForm cf = toy_chain3();
    JadmmConfig base;
    base.d = 2.0;
    base.max_iterations = 400;
    std::vector<JadmmResult> runs;
    for (int threads : {1, 2, 3}) {
        JadmmConfig cfg = base;
        cfg.threads = threads;
        runs.push_back(run_jadmm(cf, cfg));
    }
    for (size_t r = 1; r < runs.size(); ++r) {
        REQUIRE(runs[r].iterations == runs[0].iterations);
        REQUIRE(runs[r].trace.rows.size() == runs[0].trace.rows.size());
        for (size_t k = 0; k < runs[0].trace.rows.size(); ++k) {
            CHECK(runs[r].trace.rows[k].primal_sq == runs[0].trace.rows[k].primal_sq);
            for (size_t b = 0; b < runs[0].trace.rows[k].dual_sq.size(); ++b)
                CHECK(runs[r].trace.rows[k].dual_sq[b] == runs[0].trace.rows[k].dual_sq[b]);
        }
        for (int b = 0; b < 3; ++b)
            CHECK(runs[r].state.block_x[b][0] == runs[0].state.block_x[b][0]);
        CHECK(runs[r].state.multiplier[0] == runs[0].state.multiplier[0]);
    }
}

TEST_CASE("random multi-block instances converge under the simplified condition") {
    std::mt19937 rng(60221023);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_int_distribution<int> nblocks(2, 3);
    std::uniform_int_distribution<int> nvars(2, 6);

    for (int trial = 0; trial < 5; ++trial) {
        const int blocks = nblocks(rng);
        CompactForm cf;
        cf.num_rows = blocks - 1;
        cf.rhs = Vector::Zero(cf.num_rows);
        for (int bidx = 0; bidx < blocks; ++bidx) {
            const int n = nvars(rng);
            BlockModel b;
            b.name = "b" + std::to_string(bidx);
            b.problem = ConvexBlockProblem::make(n);
            Eigen::MatrixXd L(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) L(i, j) = 0.4 * gauss(rng);
            Eigen::MatrixXd Q = L.transpose() * L;
            for (int i = 0; i < n; ++i) Q(i, i) += 0.3 + unit(rng);
            std::vector<Triplet> t;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (Q(i, j) != 0.0) t.emplace_back(i, j, Q(i, j));
            b.problem.quadratic.setFromTriplets(t.begin(), t.end());
            for (int i = 0; i < n; ++i) b.problem.linear[i] = gauss(rng);
            b.problem.lower = Vector::Constant(n, -5.0);
            b.problem.upper = Vector::Constant(n, 5.0);
            for (int i = 0; i < n; ++i) b.vars.add("v" + std::to_string(i));
            // chain coupling on variable 0: block j ties to block j+1
            std::vector<Triplet> a;
            if (bidx > 0) a.emplace_back(bidx - 1, 0, -1.0);
            if (bidx + 1 < blocks) a.emplace_back(bidx, 0, 1.0);
            b.coupling.resize(cf.num_rows, n);
            b.coupling.setFromTriplets(a.begin(), a.end());
            cf.blocks.push_back(std::move(b));
        }
        JadmmConfig cfg;
        cfg.max_iterations = 10000;
        JadmmResult res = run_jadmm(cf, cfg);
        REQUIRE(res.status == JadmmStatus::Converged);
        CHECK(res.iterations < cfg.max_iterations);

        // agreement with the joint solve
        SolveReport central = solve_centralized(cf);
        REQUIRE(central.status == SolveStatus::Optimal);
        CHECK(res.objective ==
              doctest::Approx(central.objective)
                  .epsilon(10.0 * std::sqrt(cfg.eps_primal))
                  .scale(std::max(1.0, std::abs(central.objective))));
    }
}

TEST_CASE("two-block fixture: distributed matches centralized") {
    CompactForm cf = fixture_compact(oef::test::two_block_fixture());
    JadmmConfig cfg;   // Table-style: d = 4, gamma = 1, eps = 1e-4, k_max = 1000
    JadmmResult res = run_jadmm(cf, cfg);
    REQUIRE(res.status == JadmmStatus::Converged);

    SolveReport central = solve_centralized(cf);
    REQUIRE(central.status == SolveStatus::Optimal);
    CHECK(std::abs(res.objective - central.objective) /
              std::max(1.0, std::abs(central.objective)) <=
          10.0 * std::sqrt(cfg.eps_primal));

    // smoothed residual decrease over 200-iteration windows
    const auto& rows = res.trace.rows;
    if (rows.size() > 220) {
        auto merit = [&](size_t k) {
            double m = rows[k].primal_sq;
            for (double d : rows[k].dual_sq) m += d;
            return m;
        };
        for (size_t k = 0; k + 200 < rows.size(); ++k) CHECK(merit(k + 200) < merit(k));
    }
}

TEST_CASE("budget callback stops the run") {
    CompactForm cf = toy_consensus();
    JadmmConfig cfg;
    cfg.eps_primal = 1e-16;
    cfg.eps_dual = 1e-16;
    cfg.max_iterations = 100000;
    int calls = 0;
    JadmmResult res = run_jadmm(cf, cfg, [&] { return ++calls > 50; });
    CHECK(res.status == JadmmStatus::BudgetExceeded);
    CHECK(res.iterations <= 51);
}

}  // TEST_SUITE
