#include "oef/partition.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace oef {

namespace {

std::string virtual_node_id(const std::string& actual, int region) {
    return actual + "~r" + std::to_string(region);
}

}  // namespace

BlockPartition decouple(const IegsSystem& sys, const std::map<std::string, int>& regions) {
    if (regions.empty()) throw std::invalid_argument("decouple: empty region map");
    for (const auto& [id, region] : regions) {
        if (sys.find_gas_node(id))
            throw std::invalid_argument("decouple: region tag on gas node " + id +
                                        " (the gas block is never subdivided)");
        if (!sys.find_power_node(id))
            throw std::invalid_argument("decouple: region tag on unknown node " + id);
    }
    for (const auto& node : sys.power_nodes)
        if (!regions.count(node.id))
            throw std::invalid_argument("decouple: power node " + node.id + " has no region");
    for (const auto& gen : sys.gas_generators)
        if (!sys.find_gas_node(gen.gas_node))
            throw std::invalid_argument("decouple: gas-fired generator " + gen.id +
                                        " references missing gas node " + gen.gas_node);

    BlockPartition part;
    part.system = sys;

    std::set<int> region_set;
    for (const auto& [id, region] : regions) region_set.insert(region);
    part.block_regions.assign(region_set.begin(), region_set.end());
    const int num_power_blocks = static_cast<int>(part.block_regions.size());
    part.num_blocks = num_power_blocks + 1;

    auto block_of_region = [&](int region) {
        return static_cast<int>(std::lower_bound(part.block_regions.begin(),
                                                 part.block_regions.end(), region) -
                                part.block_regions.begin());
    };

    for (auto& node : part.system.power_nodes) node.block_id = regions.at(node.id);

    // Split cross-region lines through virtual node pairs. A virtual copy of
    // a node is shared by every tie-line reaching into the same region.
    std::map<std::pair<std::string, int>, std::string> virtual_of;  // (actual, region) -> id
    auto ensure_virtual = [&](const std::string& actual_id, int host_region) -> std::string {
        const auto key = std::make_pair(actual_id, host_region);
        auto it = virtual_of.find(key);
        if (it != virtual_of.end()) return it->second;
        const PowerNode* actual = sys.find_power_node(actual_id);
        PowerNode vn;
        vn.id = virtual_node_id(actual_id, host_region);
        vn.theta_min = actual->theta_min;
        vn.theta_max = actual->theta_max;
        vn.block_id = host_region;
        vn.is_virtual = true;
        vn.mirror_of = actual_id;
        part.system.power_nodes.push_back(vn);
        part.virtual_nodes.push_back({vn.id, actual_id, block_of_region(regions.at(actual_id)),
                                      block_of_region(host_region)});
        virtual_of.emplace(key, vn.id);
        return vn.id;
    };

    std::vector<PowerLine> lines;
    for (const auto& line : part.system.power_lines) {
        const int ra = regions.at(line.from_node);
        const int rb = regions.at(line.to_node);
        if (ra == rb) {
            PowerLine keep = line;
            keep.block_id = ra;
            lines.push_back(keep);
            continue;
        }
        PowerLine half_a = line;
        half_a.id = line.id + "~r" + std::to_string(ra);
        half_a.block_id = ra;
        half_a.to_node = ensure_virtual(line.to_node, ra);
        lines.push_back(half_a);

        PowerLine half_b = line;
        half_b.id = line.id + "~r" + std::to_string(rb);
        half_b.block_id = rb;
        half_b.from_node = ensure_virtual(line.from_node, rb);
        lines.push_back(half_b);
    }
    part.system.power_lines = std::move(lines);

    // Virtual gas-fired generators in the gas block.
    for (const auto& gen : sys.gas_generators) {
        GasFiredGenerator vg = gen;
        vg.id = gen.id + "~g";
        vg.is_virtual = true;
        vg.mirror_of = gen.id;
        part.system.gas_generators.push_back(vg);
        part.virtual_generators.push_back({vg.id, gen.id, block_of_region(regions.at(gen.power_node))});
    }

    // Assemble views, sorted ids for deterministic variable indexing.
    part.power_blocks.resize(num_power_blocks);
    for (int i = 0; i < num_power_blocks; ++i) part.power_blocks[i].region = part.block_regions[i];
    for (const auto& node : part.system.power_nodes)
        part.power_blocks[block_of_region(node.block_id)].node_ids.push_back(node.id);
    for (const auto& line : part.system.power_lines)
        part.power_blocks[block_of_region(line.block_id)].line_ids.push_back(line.id);
    for (const auto& gen : part.system.coal_generators)
        part.power_blocks[block_of_region(regions.at(gen.node))].coal_ids.push_back(gen.id);
    for (const auto& gen : part.system.gas_generators)
        if (!gen.is_virtual)
            part.power_blocks[block_of_region(regions.at(gen.power_node))].gasgen_ids.push_back(gen.id);
    for (auto& block : part.power_blocks) {
        std::sort(block.node_ids.begin(), block.node_ids.end());
        std::sort(block.line_ids.begin(), block.line_ids.end());
        std::sort(block.coal_ids.begin(), block.coal_ids.end());
        std::sort(block.gasgen_ids.begin(), block.gasgen_ids.end());
    }

    part.gas_block.gens_are_virtual = true;
    for (const auto& n : part.system.gas_nodes) part.gas_block.node_ids.push_back(n.id);
    for (const auto& p : part.system.pipelines) part.gas_block.pipeline_ids.push_back(p.id);
    for (const auto& c : part.system.compressors) part.gas_block.compressor_ids.push_back(c.id);
    for (const auto& w : part.system.wells) part.gas_block.well_ids.push_back(w.id);
    for (const auto& g : part.system.gas_generators)
        if (g.is_virtual) part.gas_block.gen_ids.push_back(g.id);
    std::sort(part.gas_block.node_ids.begin(), part.gas_block.node_ids.end());
    std::sort(part.gas_block.pipeline_ids.begin(), part.gas_block.pipeline_ids.end());
    std::sort(part.gas_block.compressor_ids.begin(), part.gas_block.compressor_ids.end());
    std::sort(part.gas_block.well_ids.begin(), part.gas_block.well_ids.end());
    std::sort(part.gas_block.gen_ids.begin(), part.gas_block.gen_ids.end());
    return part;
}

std::vector<CouplingConstraint> coupling_constraints(const BlockPartition& part) {
    std::vector<CouplingConstraint> out;
    auto nodes = part.virtual_nodes;
    std::sort(nodes.begin(), nodes.end(),
              [](const auto& a, const auto& b) { return a.virtual_id < b.virtual_id; });
    for (const auto& vn : nodes) {
        CouplingConstraint c;
        c.kind = CouplingConstraint::Kind::PhaseAngle;
        c.left_block = vn.actual_block;
        c.left_var = "theta:" + vn.actual_id;
        c.right_block = vn.virtual_block;
        c.right_var = "theta:" + vn.virtual_id;
        out.push_back(c);
    }
    auto gens = part.virtual_generators;
    std::sort(gens.begin(), gens.end(),
              [](const auto& a, const auto& b) { return a.virtual_id < b.virtual_id; });
    const int gas_block = part.num_blocks - 1;
    for (const auto& vg : gens) {
        CouplingConstraint c;
        c.kind = CouplingConstraint::Kind::GasGenerator;
        c.left_block = vg.actual_block;
        c.left_var = "gg:" + vg.actual_id;
        c.right_block = gas_block;
        c.right_var = "vgg:" + vg.virtual_id;
        out.push_back(c);
    }
    return out;
}

ScalingPlan default_scaling(const BlockPartition& part,
                            const std::vector<CouplingConstraint>& couplings) {
    ScalingPlan plan;
    plan.row_scale.reserve(couplings.size());
    for (const auto& c : couplings) {
        double magnitude = 0.0;
        if (c.kind == CouplingConstraint::Kind::PhaseAngle) {
            const std::string node_id = c.left_var.substr(std::string("theta:").size());
            const PowerNode* node = part.system.find_power_node(node_id);
            if (node) magnitude = std::max(std::abs(node->theta_min), std::abs(node->theta_max));
        } else {
            const std::string gen_id = c.left_var.substr(std::string("gg:").size());
            const GasFiredGenerator* gen = part.system.find_gas_generator(gen_id);
            if (gen) magnitude = gen->g_max;
        }
        plan.row_scale.push_back(magnitude > 0.0 ? 1.0 / magnitude : 1.0);
    }
    return plan;
}

CompactForm assemble_compact(const BlockPartition& part,
                             const std::vector<CouplingConstraint>& couplings,
                             const ScalingPlan& scaling,
                             const std::map<std::string, EchConstraintSet>& relaxations) {
    if (scaling.row_scale.size() != couplings.size())
        throw std::invalid_argument("assemble_compact: scaling plan size mismatch");

    CompactForm cf;
    cf.num_rows = static_cast<int>(couplings.size());
    for (const auto& view : part.power_blocks) {
        BuiltBlock built = power_block_constraints(part.system, view);
        cf.blocks.push_back({"power-r" + std::to_string(view.region), std::move(built.problem),
                             std::move(built.vars), SparseMatrix()});
    }
    BuiltBlock gas = gas_block_constraints(part.system, part.gas_block, relaxations);
    cf.blocks.push_back({"gas", std::move(gas.problem), std::move(gas.vars), SparseMatrix()});

    std::vector<std::vector<Triplet>> trips(cf.blocks.size());
    for (int row = 0; row < cf.num_rows; ++row) {
        const auto& c = couplings[row];
        const double s = scaling.row_scale[row];
        if (s <= 0.0 || !std::isfinite(s))
            throw std::invalid_argument("assemble_compact: non-positive scale in row " +
                                        std::to_string(row));
        auto place = [&](int block, const std::string& var, double sign) {
            if (block < 0 || block >= static_cast<int>(cf.blocks.size()))
                throw std::invalid_argument("assemble_compact: coupling block out of range");
            const auto& vars = cf.blocks[block].vars;
            if (!vars.contains(var))
                throw std::invalid_argument("assemble_compact: coupling variable " + var +
                                            " absent from block " + cf.blocks[block].name);
            trips[block].emplace_back(row, vars.at(var), sign * s);
        };
        place(c.left_block, c.left_var, 1.0);
        place(c.right_block, c.right_var, -1.0);
    }
    for (size_t i = 0; i < cf.blocks.size(); ++i) {
        cf.blocks[i].coupling.resize(cf.num_rows, cf.blocks[i].problem.num_vars);
        cf.blocks[i].coupling.setFromTriplets(trips[i].begin(), trips[i].end());
    }
    cf.rhs = Vector::Zero(cf.num_rows);
    return cf;
}

}  // namespace oef
