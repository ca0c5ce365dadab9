#include "oef/constraints.hpp"

#include <algorithm>
#include <stdexcept>

namespace oef {

int VariableMap::add(const std::string& name) {
    auto [it, inserted] = index.emplace(name, static_cast<int>(names.size()));
    if (!inserted) throw std::logic_error("duplicate variable " + name);
    names.push_back(name);
    return it->second;
}

int VariableMap::at(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) throw std::out_of_range("unknown variable " + name);
    return it->second;
}

int ProblemBuilder::add_var(const std::string& name, double lb, double ub) {
    if (lb > ub) throw std::invalid_argument("variable " + name + ": inverted bounds");
    const int idx = vars.add(name);
    lower_.push_back(lb);
    upper_.push_back(ub);
    linear_.push_back(0.0);
    return idx;
}

void ProblemBuilder::add_quadratic(int i, int j, double v) {
    // Stored as 1/2 x'Qx: a term a*x_i*x_j contributes symmetrically.
    if (i == j) {
        quad_.emplace_back(i, i, 2.0 * v);
    } else {
        quad_.emplace_back(i, j, v);
        quad_.emplace_back(j, i, v);
    }
}

void ProblemBuilder::add_linear(int i, double v) { linear_[i] += v; }
void ProblemBuilder::add_constant(double v) { constant_ += v; }

int ProblemBuilder::add_eq_row(const std::vector<std::pair<int, double>>& entries, double rhs) {
    const int row = static_cast<int>(eq_rhs_.size());
    for (auto [col, v] : entries) eq_.emplace_back(row, col, v);
    eq_rhs_.push_back(rhs);
    return row;
}

int ProblemBuilder::add_ineq_row(const std::vector<std::pair<int, double>>& entries, double rhs) {
    const int row = static_cast<int>(ineq_rhs_.size());
    for (auto [col, v] : entries) ineq_.emplace_back(row, col, v);
    ineq_rhs_.push_back(rhs);
    return row;
}

void ProblemBuilder::add_parabola(int flow, int pressure_from, int pressure_to, double weymouth) {
    parabolas_.push_back({flow, pressure_from, pressure_to, weymouth});
}

ConvexBlockProblem ProblemBuilder::build() const {
    const int n = vars.size();
    ConvexBlockProblem p = ConvexBlockProblem::make(n);
    p.quadratic.setFromTriplets(quad_.begin(), quad_.end());
    for (int j = 0; j < n; ++j) p.linear[j] = linear_[j];
    p.constant = constant_;
    p.eq.resize(static_cast<int>(eq_rhs_.size()), n);
    p.eq.setFromTriplets(eq_.begin(), eq_.end());
    p.eq_rhs = Eigen::Map<const Vector>(eq_rhs_.data(), static_cast<Eigen::Index>(eq_rhs_.size()));
    p.ineq.resize(static_cast<int>(ineq_rhs_.size()), n);
    p.ineq.setFromTriplets(ineq_.begin(), ineq_.end());
    p.ineq_rhs = Eigen::Map<const Vector>(ineq_rhs_.data(), static_cast<Eigen::Index>(ineq_rhs_.size()));
    for (int j = 0; j < n; ++j) {
        p.lower[j] = lower_[j];
        p.upper[j] = upper_[j];
    }
    p.parabolas = parabolas_;
    return p;
}

GasBlockView whole_gas_view(const IegsSystem& sys) {
    GasBlockView v;
    v.gens_are_virtual = false;
    for (const auto& n : sys.gas_nodes) v.node_ids.push_back(n.id);
    for (const auto& p : sys.pipelines) v.pipeline_ids.push_back(p.id);
    for (const auto& c : sys.compressors) v.compressor_ids.push_back(c.id);
    for (const auto& w : sys.wells) v.well_ids.push_back(w.id);
    for (const auto& g : sys.gas_generators)
        if (!g.is_virtual) v.gen_ids.push_back(g.id);
    return v;
}

PowerBlockView whole_power_view(const IegsSystem& sys) {
    PowerBlockView v;
    for (const auto& n : sys.power_nodes) v.node_ids.push_back(n.id);
    for (const auto& l : sys.power_lines) v.line_ids.push_back(l.id);
    for (const auto& g : sys.coal_generators) v.coal_ids.push_back(g.id);
    for (const auto& g : sys.gas_generators)
        if (!g.is_virtual) v.gasgen_ids.push_back(g.id);
    return v;
}

void append_power_block(ProblemBuilder& b, const IegsSystem& sys, const PowerBlockView& view) {
    for (const auto& id : view.coal_ids) {
        const CoalGenerator* gen = nullptr;
        for (const auto& g : sys.coal_generators)
            if (g.id == id) gen = &g;
        if (!gen) throw std::invalid_argument("unknown coal generator " + id);
        const int p = b.add_var("p:" + id, gen->p_min, gen->p_max);
        b.add_quadratic(p, p, gen->c1);
        b.add_linear(p, gen->c2);
        b.add_constant(gen->c3);
    }
    for (const auto& id : view.gasgen_ids) {
        const GasFiredGenerator* gen = sys.find_gas_generator(id);
        if (!gen) throw std::invalid_argument("unknown gas-fired generator " + id);
        b.add_var("gg:" + id, gen->g_min, gen->g_max);
    }
    for (const auto& id : view.node_ids) {
        const PowerNode* node = sys.find_power_node(id);
        if (!node) throw std::invalid_argument("unknown power node " + id);
        b.add_var("theta:" + id, node->theta_min, node->theta_max);
    }
    for (const auto& id : view.line_ids) {
        const PowerLine* line = nullptr;
        for (const auto& l : sys.power_lines)
            if (l.id == id) line = &l;
        if (!line) throw std::invalid_argument("unknown power line " + id);
        const int f = b.add_var("flow:" + id, -line->p_cap, line->p_cap);
        // DC power flow: x_l * p_l = theta_i - theta_j
        b.add_eq_row({{f, line->x},
                      {b.vars.at("theta:" + line->from_node), -1.0},
                      {b.vars.at("theta:" + line->to_node), 1.0}},
                     0.0);
    }
    // Nodal balance; virtual nodes carry no balance row.
    for (const auto& id : view.node_ids) {
        const PowerNode* node = sys.find_power_node(id);
        if (node->is_virtual) continue;
        std::vector<std::pair<int, double>> row;
        for (const auto& gid : view.coal_ids) {
            for (const auto& g : sys.coal_generators)
                if (g.id == gid && g.node == id) row.push_back({b.vars.at("p:" + gid), 1.0});
        }
        for (const auto& gid : view.gasgen_ids) {
            const GasFiredGenerator* g = sys.find_gas_generator(gid);
            if (g->power_node == id) row.push_back({b.vars.at("gg:" + gid), 1.0});
        }
        for (const auto& lid : view.line_ids) {
            for (const auto& l : sys.power_lines) {
                if (l.id != lid) continue;
                if (l.to_node == id) row.push_back({b.vars.at("flow:" + lid), 1.0});
                if (l.from_node == id) row.push_back({b.vars.at("flow:" + lid), -1.0});
            }
        }
        double demand = 0.0;
        for (const auto& load : sys.loads)
            if (load.kind == LoadKind::Power && load.node == id) demand += load.amount;
        b.add_eq_row(row, demand);
    }
}

void append_gas_block(ProblemBuilder& b, const IegsSystem& sys, const GasBlockView& view,
                      const std::map<std::string, EchConstraintSet>& relaxations) {
    for (const auto& id : view.well_ids) {
        const GasWell* well = nullptr;
        for (const auto& w : sys.wells)
            if (w.id == id) well = &w;
        if (!well) throw std::invalid_argument("unknown well " + id);
        const int v = b.add_var("w:" + id, well->g_min, well->g_max);
        b.add_linear(v, well->cost);
    }
    for (const auto& id : view.compressor_ids) {
        const GasCompressor* comp = nullptr;
        for (const auto& c : sys.compressors)
            if (c.id == id) comp = &c;
        if (!comp) throw std::invalid_argument("unknown compressor " + id);
        b.add_var("comp:" + id, 0.0, comp->g_cap);
    }
    for (const auto& id : view.node_ids) {
        const GasNode* node = sys.find_gas_node(id);
        if (!node) throw std::invalid_argument("unknown gas node " + id);
        b.add_var("pi:" + id, node->pi_min, node->pi_max);
    }
    // Virtual gas-fired generators get their own output variable; in the
    // monolithic model the actual generator's variable already exists.
    if (view.gens_are_virtual) {
        for (const auto& id : view.gen_ids) {
            const GasFiredGenerator* gen = sys.find_gas_generator(id);
            if (!gen) throw std::invalid_argument("unknown gas-fired generator " + id);
            b.add_var("vgg:" + id, gen->g_min, gen->g_max);
        }
    }
    for (const auto& id : view.pipeline_ids) {
        const GasPipeline* pipe = nullptr;
        for (const auto& p : sys.pipelines)
            if (p.id == id) pipe = &p;
        if (!pipe) throw std::invalid_argument("unknown pipeline " + id);
        auto rel = relaxations.find(id);
        if (rel == relaxations.end())
            throw std::invalid_argument("pipeline " + id + ": missing ECH relaxation");
        const EchConstraintSet& set = rel->second;
        const int g = b.add_var("pipe:" + id, set.g_min, set.g_max);
        const int pi_i = b.vars.at("pi:" + pipe->from_node);
        const int pi_j = b.vars.at("pi:" + pipe->to_node);
        // lower line: a*dpi + b <= g
        b.add_ineq_row({{pi_i, set.a_lower}, {pi_j, -set.a_lower}, {g, -1.0}}, -set.b_lower);
        if (set.kind == EchCase::General)
            b.add_ineq_row({{g, 1.0}, {pi_i, -set.a_upper}, {pi_j, set.a_upper}}, set.b_upper);
        if (set.has_parabolic_cap) b.add_parabola(g, pi_i, pi_j, set.weymouth);
    }
    // Compressor pressure rows: pi_out <= alpha * pi_in.
    for (const auto& id : view.compressor_ids) {
        for (const auto& c : sys.compressors) {
            if (c.id != id) continue;
            b.add_ineq_row({{b.vars.at("pi:" + c.to_node), 1.0},
                            {b.vars.at("pi:" + c.from_node), -c.alpha}},
                           0.0);
        }
    }
    // Nodal gas balance.
    for (const auto& id : view.node_ids) {
        std::vector<std::pair<int, double>> row;
        for (const auto& wid : view.well_ids) {
            for (const auto& w : sys.wells)
                if (w.id == wid && w.node == id) row.push_back({b.vars.at("w:" + wid), 1.0});
        }
        for (const auto& pid : view.pipeline_ids) {
            for (const auto& p : sys.pipelines) {
                if (p.id != pid) continue;
                if (p.to_node == id) row.push_back({b.vars.at("pipe:" + pid), 1.0});
                if (p.from_node == id) row.push_back({b.vars.at("pipe:" + pid), -1.0});
            }
        }
        for (const auto& cid : view.compressor_ids) {
            for (const auto& c : sys.compressors) {
                if (c.id != cid) continue;
                if (c.to_node == id) row.push_back({b.vars.at("comp:" + cid), 1.0});
                if (c.from_node == id) row.push_back({b.vars.at("comp:" + cid), -1.0});
            }
        }
        for (const auto& gid : view.gen_ids) {
            const GasFiredGenerator* gen = sys.find_gas_generator(gid);
            if (gen->gas_node != id) continue;
            const std::string key = (view.gens_are_virtual ? "vgg:" : "gg:") + gid;
            row.push_back({b.vars.at(key), -gen->chi});
        }
        double demand = 0.0;
        for (const auto& load : sys.loads)
            if (load.kind == LoadKind::Gas && load.node == id) demand += load.amount;
        b.add_eq_row(row, demand);
    }
}

BuiltBlock power_block_constraints(const IegsSystem& sys, const PowerBlockView& view) {
    ProblemBuilder b;
    append_power_block(b, sys, view);
    BuiltBlock out{b.build(), b.vars};
    return out;
}

BuiltBlock gas_block_constraints(const IegsSystem& sys, const GasBlockView& view,
                                 const std::map<std::string, EchConstraintSet>& relaxations) {
    ProblemBuilder b;
    append_gas_block(b, sys, view, relaxations);
    BuiltBlock out{b.build(), b.vars};
    return out;
}

}  // namespace oef
