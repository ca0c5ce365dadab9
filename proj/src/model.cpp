#include "oef/model.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace oef {

namespace {

template <typename T>
const T* find_by_id(const std::vector<T>& items, const std::string& id) {
    for (const auto& item : items)
        if (item.id == id) return &item;
    return nullptr;
}

}  // namespace

const PowerNode* IegsSystem::find_power_node(const std::string& id) const {
    return find_by_id(power_nodes, id);
}
const GasNode* IegsSystem::find_gas_node(const std::string& id) const {
    return find_by_id(gas_nodes, id);
}
const GasFiredGenerator* IegsSystem::find_gas_generator(const std::string& id) const {
    return find_by_id(gas_generators, id);
}

bool ValidationReport::mentions(const std::string& text) const {
    for (const auto& issue : issues)
        if (issue.message.find(text) != std::string::npos) return true;
    return false;
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (const auto& issue : issues) out << issue.component << ": " << issue.message << "\n";
    return out.str();
}

ValidationReport validate_system(const IegsSystem& sys) {
    ValidationReport rep;
    auto flag = [&](const std::string& comp, const std::string& msg) {
        rep.issues.push_back({comp, msg});
    };

    auto check_unique = [&](const auto& items, const std::string& what) {
        std::set<std::string> seen;
        for (const auto& item : items)
            if (!seen.insert(item.id).second) flag(what + " " + item.id, "duplicate id " + item.id);
    };
    check_unique(sys.power_nodes, "power node");
    check_unique(sys.power_lines, "power line");
    check_unique(sys.coal_generators, "coal generator");
    check_unique(sys.gas_generators, "gas-fired generator");
    check_unique(sys.gas_nodes, "gas node");
    check_unique(sys.pipelines, "pipeline");
    check_unique(sys.compressors, "compressor");
    check_unique(sys.wells, "well");
    check_unique(sys.loads, "load");

    auto power_node_ok = [&](const std::string& id) { return sys.find_power_node(id) != nullptr; };
    auto gas_node_ok = [&](const std::string& id) { return sys.find_gas_node(id) != nullptr; };

    for (const auto& node : sys.power_nodes) {
        if (node.theta_min > node.theta_max)
            flag("power node " + node.id, "inverted phase-angle bounds");
        if (node.is_virtual && !node.mirror_of)
            flag("power node " + node.id, "virtual node without mirror");
        if (node.is_virtual && node.mirror_of) {
            const PowerNode* actual = sys.find_power_node(*node.mirror_of);
            if (!actual)
                flag("power node " + node.id, "unresolved mirror power node " + *node.mirror_of);
            else if (actual->block_id == node.block_id)
                flag("power node " + node.id, "virtual node mirrors a node in the same block");
        }
    }
    for (const auto& line : sys.power_lines) {
        if (line.x <= 0.0) flag("power line " + line.id, "non-positive reactance");
        if (line.p_cap <= 0.0) flag("power line " + line.id, "non-positive thermal limit");
        if (!power_node_ok(line.from_node))
            flag("power line " + line.id, "unresolved power node " + line.from_node);
        if (!power_node_ok(line.to_node))
            flag("power line " + line.id, "unresolved power node " + line.to_node);
    }
    for (const auto& gen : sys.coal_generators) {
        if (gen.p_min < 0.0 || gen.p_min > gen.p_max)
            flag("coal generator " + gen.id, "inverted or negative output bounds");
        if (gen.c1 < 0.0) flag("coal generator " + gen.id, "negative quadratic cost coefficient");
        if (!power_node_ok(gen.node)) flag("coal generator " + gen.id, "unresolved power node " + gen.node);
    }
    for (const auto& gen : sys.gas_generators) {
        if (gen.g_min < 0.0 || gen.g_min > gen.g_max)
            flag("gas-fired generator " + gen.id, "inverted or negative output bounds");
        if (gen.chi <= 0.0) flag("gas-fired generator " + gen.id, "non-positive conversion ratio");
        if (!gen.is_virtual && !power_node_ok(gen.power_node))
            flag("gas-fired generator " + gen.id, "unresolved power node " + gen.power_node);
        if (!gas_node_ok(gen.gas_node))
            flag("gas-fired generator " + gen.id, "unresolved gas node " + gen.gas_node);
        if (gen.is_virtual && !gen.mirror_of)
            flag("gas-fired generator " + gen.id, "virtual generator without mirror");
    }
    for (const auto& node : sys.gas_nodes) {
        if (node.pi_min < 0.0 || node.pi_min > node.pi_max)
            flag("gas node " + node.id, "inverted or negative pressure-square bounds");
    }
    for (const auto& pipe : sys.pipelines) {
        if (pipe.weymouth <= 0.0) flag("pipeline " + pipe.id, "non-positive Weymouth constant");
        if (!gas_node_ok(pipe.from_node)) flag("pipeline " + pipe.id, "unresolved gas node " + pipe.from_node);
        if (!gas_node_ok(pipe.to_node)) flag("pipeline " + pipe.id, "unresolved gas node " + pipe.to_node);
        if (pipe.g_cap_min && pipe.g_cap_max && (*pipe.g_cap_min > 0.0 || *pipe.g_cap_max < 0.0))
            flag("pipeline " + pipe.id, "flow caps must bracket zero for a bi-directional pipeline");
    }
    for (const auto& comp : sys.compressors) {
        if (comp.alpha < 1.0) flag("compressor " + comp.id, "compression constant below 1");
        if (comp.g_cap <= 0.0) flag("compressor " + comp.id, "non-positive flow limit");
        if (!gas_node_ok(comp.from_node)) flag("compressor " + comp.id, "unresolved gas node " + comp.from_node);
        if (!gas_node_ok(comp.to_node)) flag("compressor " + comp.id, "unresolved gas node " + comp.to_node);
    }
    for (const auto& well : sys.wells) {
        if (well.g_min < 0.0 || well.g_min > well.g_max)
            flag("well " + well.id, "inverted or negative output bounds");
        if (well.cost < 0.0) flag("well " + well.id, "negative cost");
        if (!gas_node_ok(well.node)) flag("well " + well.id, "unresolved gas node " + well.node);
    }
    for (const auto& load : sys.loads) {
        if (load.amount < 0.0) flag("load " + load.id, "negative amount");
        if (load.kind == LoadKind::Power) {
            if (!power_node_ok(load.node)) flag("load " + load.id, "unresolved power node " + load.node);
            const PowerNode* node = sys.find_power_node(load.node);
            if (node && node->is_virtual) flag("load " + load.id, "load attached to a virtual power node");
        } else if (!gas_node_ok(load.node)) {
            flag("load " + load.id, "unresolved gas node " + load.node);
        }
    }

    // Power network connectivity (actual nodes, before partitioning).
    if (sys.power_nodes.size() > 1) {
        std::map<std::string, std::vector<std::string>> adj;
        for (const auto& line : sys.power_lines) {
            adj[line.from_node].push_back(line.to_node);
            adj[line.to_node].push_back(line.from_node);
        }
        std::set<std::string> seen;
        std::vector<std::string> stack{sys.power_nodes.front().id};
        while (!stack.empty()) {
            std::string cur = stack.back();
            stack.pop_back();
            if (!seen.insert(cur).second) continue;
            for (const auto& next : adj[cur]) stack.push_back(next);
        }
        if (seen.size() != sys.power_nodes.size())
            flag("power network", "power network is not connected");
    }
    return rep;
}

double weymouth_residual(const GasPipeline& pipe, double flow, double pi_from, double pi_to) {
    const double sgn = pi_from >= pi_to ? 1.0 : -1.0;
    return flow * flow * sgn - pipe.weymouth * (pi_from - pi_to);
}

double PhysicalSolution::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw std::out_of_range("solution has no variable " + key);
    return it->second;
}

std::vector<NodeResidual> balance_residuals(const IegsSystem& sys, const PhysicalSolution& sol) {
    std::vector<NodeResidual> out;
    for (const auto& node : sys.power_nodes) {
        if (node.is_virtual) continue;
        double r = 0.0;
        for (const auto& gen : sys.coal_generators)
            if (gen.node == node.id) r += sol.at("p:" + gen.id);
        for (const auto& gen : sys.gas_generators)
            if (!gen.is_virtual && gen.power_node == node.id) r += sol.at("gg:" + gen.id);
        for (const auto& line : sys.power_lines) {
            if (line.to_node == node.id) r += sol.at("flow:" + line.id);
            if (line.from_node == node.id) r -= sol.at("flow:" + line.id);
        }
        for (const auto& load : sys.loads)
            if (load.kind == LoadKind::Power && load.node == node.id) r -= load.amount;
        out.push_back({node.id, true, r});
    }
    std::set<std::string> mirrored;
    for (const auto& gen : sys.gas_generators)
        if (gen.is_virtual && gen.mirror_of) mirrored.insert(*gen.mirror_of);
    for (const auto& node : sys.gas_nodes) {
        double r = 0.0;
        for (const auto& well : sys.wells)
            if (well.node == node.id) r += sol.at("w:" + well.id);
        for (const auto& pipe : sys.pipelines) {
            if (pipe.to_node == node.id) r += sol.at("pipe:" + pipe.id);
            if (pipe.from_node == node.id) r -= sol.at("pipe:" + pipe.id);
        }
        for (const auto& comp : sys.compressors) {
            if (comp.to_node == node.id) r += sol.at("comp:" + comp.id);
            if (comp.from_node == node.id) r -= sol.at("comp:" + comp.id);
        }
        for (const auto& load : sys.loads)
            if (load.kind == LoadKind::Gas && load.node == node.id) r -= load.amount;
        for (const auto& gen : sys.gas_generators) {
            if (gen.gas_node != node.id) continue;
            // Gas demand of a gas-fired generator: chi * output. Once the
            // system is partitioned the virtual copy carries the demand and
            // the mirrored actual generator is skipped.
            if (gen.is_virtual)
                r -= gen.chi * sol.at("vgg:" + gen.id);
            else if (!mirrored.count(gen.id))
                r -= gen.chi * sol.at("gg:" + gen.id);
        }
        out.push_back({node.id, false, r});
    }
    return out;
}

}  // namespace oef
