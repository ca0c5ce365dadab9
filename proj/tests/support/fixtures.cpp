#include "support/fixtures.hpp"

#include "oef/io.hpp"

#include <cmath>

namespace oef::test {

IegsSystem two_block_fixture() {
    static const IegsSystem sys = load_network(std::string(OEF_FIXTURE_DIR) + "/two_block.json");
    return sys;
}

IegsSystem four_block_fixture() {
    static const IegsSystem sys = load_network(std::string(OEF_FIXTURE_DIR) + "/four_block.json");
    return sys;
}

IegsSystem chain3_gas_fixture() {
    IegsSystem sys;
    sys.gas_nodes = {{"g1", 0.0, 2.0}, {"g2", 0.0, 2.0}, {"g3", 0.0, 2.0}};
    GasPipeline p1{"p1", "g1", "g2", 1.0, {}, {}, false};
    GasPipeline p2{"p2", "g2", "g3", 1.0, {}, {}, false};
    sys.pipelines = {p1, p2};
    // Cheap but capped well upstream, expensive backstop downstream.
    sys.wells = {{"w1", "g1", 0.0, 0.9, 1.0}, {"w2", "g3", 0.0, 5.0, 3.0}};
    sys.loads = {{"d2", "g2", LoadKind::Gas, 0.6}, {"d3", "g3", LoadKind::Gas, 0.5}};
    return sys;
}

IegsSystem minimal_power_fixture() {
    IegsSystem sys;
    sys.power_nodes = {{"n1", -0.5, 0.5, 0, false, {}}};
    sys.coal_generators = {{"cg1", "n1", 0.0, 100.0, 0.01, 20.0, 0.0}};
    sys.loads = {{"d1", "n1", LoadKind::Power, 40.0}};
    return sys;
}

IegsSystem random_radial_gas(std::mt19937& rng, int num_nodes, double load_fraction) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    IegsSystem sys;

    std::vector<int> parent(num_nodes, -1);
    std::vector<int> depth(num_nodes, 0);
    int max_depth = 0;
    for (int i = 1; i < num_nodes; ++i) {
        std::uniform_int_distribution<int> pick(0, i - 1);
        parent[i] = pick(rng);
        depth[i] = depth[parent[i]] + 1;
        max_depth = std::max(max_depth, depth[i]);
    }

    const double well_capacity = 100.0;
    // Worst-case pressure drop: every edge near its heaviest plausible flow.
    const double w_lo = 40.0, w_hi = 160.0;
    const double worst_dpi = well_capacity * well_capacity / w_lo;
    const double pi_max = worst_dpi * (max_depth + 1) * 1.5;
    for (int i = 0; i < num_nodes; ++i)
        sys.gas_nodes.push_back({"g" + std::to_string(i), 0.0, pi_max});

    for (int i = 1; i < num_nodes; ++i) {
        GasPipeline p;
        p.id = "p" + std::to_string(i);
        p.from_node = "g" + std::to_string(parent[i]);
        p.to_node = "g" + std::to_string(i);
        p.weymouth = w_lo + (w_hi - w_lo) * unit(rng);
        sys.pipelines.push_back(p);
    }

    sys.wells.push_back({"w0", "g0", 0.0, well_capacity, 1.0 + unit(rng)});

    // Spread load over the leaves and a few interior nodes.
    std::vector<double> weights(num_nodes, 0.0);
    double total_weight = 0.0;
    for (int i = 1; i < num_nodes; ++i) {
        weights[i] = 0.2 + unit(rng);
        total_weight += weights[i];
    }
    const double total_load = load_fraction * well_capacity;
    for (int i = 1; i < num_nodes; ++i) {
        const double amount = total_load * weights[i] / total_weight;
        sys.loads.push_back({"d" + std::to_string(i), "g" + std::to_string(i), LoadKind::Gas,
                             amount});
    }
    return sys;
}

}  // namespace oef::test
