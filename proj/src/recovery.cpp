#include "oef/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace oef {

std::string to_string(RecoveryStatus s) {
    switch (s) {
        case RecoveryStatus::Recovered: return "recovered";
        case RecoveryStatus::SlackPositive: return "slack-positive";
        case RecoveryStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

RecoveryProblem build_recovery_lp(const IegsSystem& sys,
                                  const std::map<std::string, double>& pipe_flows) {
    RecoveryProblem rp;
    ProblemBuilder b;

    double positive_bound_sum = 0.0;
    int positive_bound_count = 0;
    for (const auto& node : sys.gas_nodes) {
        if (node.pi_min > 0.0) {
            positive_bound_sum += node.pi_min;
            ++positive_bound_count;
        }
        if (node.pi_max > 0.0) {
            positive_bound_sum += node.pi_max;
            ++positive_bound_count;
        }
    }
    const double additive_scale =
        positive_bound_count > 0 ? positive_bound_sum / positive_bound_count : 1.0;

    double max_bound_sum = 0.0;
    for (const auto& node : sys.gas_nodes) {
        rp.node_ids.push_back(node.id);
        max_bound_sum += node.pi_max;
        b.add_var("pi:" + node.id, -kInf, kInf);
    }
    rp.bound_scale = sys.gas_nodes.empty() ? 1.0 : max_bound_sum / sys.gas_nodes.size();

    for (const auto& node : sys.gas_nodes) {
        const int dp = b.add_var("dp:" + node.id, 0.0, kInf);
        const int dm = b.add_var("dm:" + node.id, 0.0, kInf);
        b.add_linear(dp, 1.0);
        b.add_linear(dm, 1.0);
        const int pi = b.vars.at("pi:" + node.id);
        // pi <= (1 + dp) * pi_max
        b.add_ineq_row({{pi, 1.0}, {dp, -node.pi_max}}, node.pi_max);
        if (node.pi_min > 0.0) {
            // (1 - dm) * pi_min <= pi
            b.add_ineq_row({{pi, -1.0}, {dm, -node.pi_min}}, -node.pi_min);
        } else {
            // The multiplicative slack is inert at a zero bound; allow an
            // additive escape scaled by the mean positive bound instead.
            b.add_ineq_row({{pi, -1.0}, {dm, -additive_scale}}, 0.0);
        }
    }
    for (const auto& pipe : sys.pipelines) {
        auto it = pipe_flows.find(pipe.id);
        if (it == pipe_flows.end())
            throw std::invalid_argument("recovery: no fixed flow for pipeline " + pipe.id);
        const double g = it->second;
        const double sgn = g >= 0.0 ? 1.0 : -1.0;
        const double dpi = sgn * g * g / pipe.weymouth;
        b.add_eq_row({{b.vars.at("pi:" + pipe.from_node), 1.0},
                      {b.vars.at("pi:" + pipe.to_node), -1.0}},
                     dpi);
    }
    for (const auto& comp : sys.compressors) {
        b.add_ineq_row({{b.vars.at("pi:" + comp.to_node), 1.0},
                        {b.vars.at("pi:" + comp.from_node), -comp.alpha}},
                       0.0);
    }
    rp.lp = b.build();
    rp.lp.add_diagonal_regularization(1e-8);
    rp.vars = b.vars;
    return rp;
}

RecoveryOutcome check_and_recover(const PhysicalSolution& convexified, const IegsSystem& sys) {
    std::map<std::string, double> flows;
    for (const auto& pipe : sys.pipelines) flows[pipe.id] = convexified.at("pipe:" + pipe.id);
    RecoveryProblem rp = build_recovery_lp(sys, flows);

    QpSettings settings;
    settings.tolerance = 1e-10;
    SolveReport rep = solve_block(rp.lp, settings);

    RecoveryOutcome out;
    if (rep.status == SolveStatus::InfeasibleDetected) {
        out.status = RecoveryStatus::Infeasible;
        out.note = "slack LP infeasible; the convexified objective is a lower bound on the "
                   "original optimum";
        return out;
    }
    if (rep.status != SolveStatus::Optimal) {
        out.status = RecoveryStatus::Infeasible;
        out.note = "slack LP did not converge (" + to_string(rep.status) + ")";
        return out;
    }
    // Slack objective without the tiny regularization term.
    double slack_total = 0.0;
    for (const auto& id : rp.node_ids) {
        const double dp = rep.solution[rp.vars.at("dp:" + id)];
        const double dm = rep.solution[rp.vars.at("dm:" + id)];
        out.slack_upper[id] = dp;
        out.slack_lower[id] = dm;
        slack_total += dp + dm;
        out.pressure_squares[id] = rep.solution[rp.vars.at("pi:" + id)];
    }
    out.objective = slack_total;
    const double threshold = 1e-6 * std::max(1.0, rp.bound_scale);
    if (slack_total <= threshold) {
        out.status = RecoveryStatus::Recovered;
        out.note = "zero slack; original and convexified optima coincide";
    } else {
        out.status = RecoveryStatus::SlackPositive;
        out.note = "positive slack quantifies the infeasibility; the convexified objective "
                   "remains a lower bound";
    }
    return out;
}

PhysicalSolution apply_recovery(const PhysicalSolution& convexified,
                                const RecoveryOutcome& outcome) {
    PhysicalSolution out = convexified;
    for (const auto& [node, pi] : outcome.pressure_squares) out.set("pi:" + node, pi);
    return out;
}

VerifyReport verify_original(const PhysicalSolution& sol, const IegsSystem& sys, double tol) {
    VerifyReport rep;
    auto check = [&](const std::string& what, double violation, double scale) {
        const double rel = violation / std::max(1.0, scale);
        rep.max_violation = std::max(rep.max_violation, rel);
        if (rel > tol) rep.violations.push_back({what, rel});
    };
    auto check_box = [&](const std::string& what, double v, double lo, double hi) {
        check(what + " lower bound", lo - v, std::abs(lo));
        check(what + " upper bound", v - hi, std::abs(hi));
    };

    for (const auto& gen : sys.coal_generators)
        check_box("coal generator " + gen.id, sol.at("p:" + gen.id), gen.p_min, gen.p_max);
    for (const auto& gen : sys.gas_generators) {
        const std::string key = (gen.is_virtual ? "vgg:" : "gg:") + gen.id;
        check_box("gas-fired generator " + gen.id, sol.at(key), gen.g_min, gen.g_max);
    }
    for (const auto& node : sys.power_nodes)
        check_box("power node " + node.id + " angle", sol.at("theta:" + node.id), node.theta_min,
                  node.theta_max);
    for (const auto& line : sys.power_lines) {
        const double flow = sol.at("flow:" + line.id);
        check_box("power line " + line.id + " flow", flow, -line.p_cap, line.p_cap);
        const double lhs = line.x * flow;
        const double rhs = sol.at("theta:" + line.from_node) - sol.at("theta:" + line.to_node);
        check("power line " + line.id + " dc flow", std::abs(lhs - rhs), std::abs(rhs));
    }
    for (const auto& well : sys.wells)
        check_box("well " + well.id, sol.at("w:" + well.id), well.g_min, well.g_max);
    for (const auto& comp : sys.compressors) {
        check_box("compressor " + comp.id + " flow", sol.at("comp:" + comp.id), 0.0, comp.g_cap);
        const double pi_in = sol.at("pi:" + comp.from_node);
        const double pi_out = sol.at("pi:" + comp.to_node);
        check("compressor " + comp.id + " pressure", pi_out - comp.alpha * pi_in,
              std::abs(comp.alpha * pi_in));
    }
    for (const auto& node : sys.gas_nodes)
        check_box("gas node " + node.id + " pressure", sol.at("pi:" + node.id), node.pi_min,
                  node.pi_max);
    for (const auto& pipe : sys.pipelines) {
        const double g = sol.at("pipe:" + pipe.id);
        const double pi_i = sol.at("pi:" + pipe.from_node);
        const double pi_j = sol.at("pi:" + pipe.to_node);
        const double resid = weymouth_residual(pipe, g, pi_i, pi_j);
        check("pipeline " + pipe.id + " weymouth", std::abs(resid),
              std::max(g * g, pipe.weymouth * std::abs(pi_i - pi_j)));
    }
    for (const auto& nr : balance_residuals(sys, sol)) {
        const std::string what =
            std::string(nr.is_power ? "power" : "gas") + " node " + nr.node + " balance";
        check(what, std::abs(nr.residual), 0.0);
    }
    // Couplings between actual components and their virtual replicas.
    for (const auto& node : sys.power_nodes) {
        if (!node.is_virtual || !node.mirror_of) continue;
        const double actual = sol.at("theta:" + *node.mirror_of);
        const double replica = sol.at("theta:" + node.id);
        check("virtual node " + node.id + " coupling", std::abs(actual - replica),
              std::abs(actual));
    }
    for (const auto& gen : sys.gas_generators) {
        if (!gen.is_virtual || !gen.mirror_of) continue;
        const double actual = sol.at("gg:" + *gen.mirror_of);
        const double replica = sol.at("vgg:" + gen.id);
        check("virtual generator " + gen.id + " coupling", std::abs(actual - replica),
              std::abs(actual));
    }

    std::sort(rep.violations.begin(), rep.violations.end(),
              [](const auto& a, const auto& b) { return a.violation > b.violation; });
    rep.pass = rep.violations.empty();
    return rep;
}

}  // namespace oef
