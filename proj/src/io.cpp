#include "oef/io.hpp"

#include "oef/central.hpp"
#include "oef/ech.hpp"
#include "oef/partition.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace oef {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "iegs-network";
constexpr int kFormatVersion = 1;

const json& expected_units() {
    static const json units = {{"gas", "Sm3_per_h"},
                               {"power", "MW"},
                               {"pressure_square", "bar2"},
                               {"reactance", "pu"}};
    return units;
}

[[noreturn]] void fail(const std::string& origin, const std::string& path, const std::string& msg) {
    throw std::runtime_error(origin + ": " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& origin, const std::string& path,
                const std::set<std::string>& required, const std::set<std::string>& optional = {}) {
    for (const auto& [key, value] : obj.items()) {
        if (!required.count(key) && !optional.count(key))
            fail(origin, path, "unknown field \"" + key + "\"");
    }
    for (const auto& key : required)
        if (!obj.contains(key)) fail(origin, path, "missing field \"" + key + "\"");
}

double number_at(const json& obj, const std::string& origin, const std::string& path,
                 const std::string& key) {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(origin, path + "/" + key, "expected a number");
    return v.get<double>();
}

std::string string_at(const json& obj, const std::string& origin, const std::string& path,
                      const std::string& key) {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(origin, path + "/" + key, "expected a string");
    return v.get<std::string>();
}

template <typename Fn>
void parse_section(const json& doc, const std::string& origin, const std::string& section, Fn fn) {
    if (!doc.contains(section)) return;
    const auto& arr = doc.at(section);
    if (!arr.is_array()) fail(origin, "/" + section, "expected an array");
    std::set<std::string> ids;
    for (size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "/" + section + "/" + std::to_string(i);
        const auto& item = arr[i];
        if (!item.is_object()) fail(origin, path, "expected an object");
        const std::string id = string_at(item, origin, path, "id");
        if (!ids.insert(id).second) fail(origin, path, "duplicate id \"" + id + "\"");
        fn(item, path, id);
    }
}

json canonical_number(double v) { return json(v); }

}  // namespace

IegsSystem parse_network(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    if (!doc.is_object()) fail(origin, "/", "expected a JSON object");
    check_keys(doc, origin, "/", {"format", "version", "units"},
               {"power_nodes", "power_lines", "coal_generators", "gas_fired_generators",
                "gas_nodes", "pipelines", "compressors", "wells", "loads"});
    if (doc.at("format") != kFormatName)
        fail(origin, "/format", "expected \"" + std::string(kFormatName) + "\"");
    if (doc.at("version") != kFormatVersion)
        fail(origin, "/version", "unsupported version");
    if (doc.at("units") != expected_units())
        fail(origin, "/units", "unit mismatch; expected " + expected_units().dump());

    IegsSystem sys;
    parse_section(doc, origin, "power_nodes", [&](const json& item, const std::string& path,
                                                  const std::string& id) {
        check_keys(item, origin, path, {"id", "region", "theta_min", "theta_max"});
        PowerNode n;
        n.id = id;
        if (!item.at("region").is_number_integer()) fail(origin, path + "/region", "expected an integer");
        n.block_id = item.at("region").get<int>();
        n.theta_min = number_at(item, origin, path, "theta_min");
        n.theta_max = number_at(item, origin, path, "theta_max");
        sys.power_nodes.push_back(n);
    });
    parse_section(doc, origin, "power_lines", [&](const json& item, const std::string& path,
                                                  const std::string& id) {
        check_keys(item, origin, path, {"id", "from", "to", "x", "p_cap"});
        PowerLine l;
        l.id = id;
        l.from_node = string_at(item, origin, path, "from");
        l.to_node = string_at(item, origin, path, "to");
        l.x = number_at(item, origin, path, "x");
        l.p_cap = number_at(item, origin, path, "p_cap");
        sys.power_lines.push_back(l);
    });
    parse_section(doc, origin, "coal_generators", [&](const json& item, const std::string& path,
                                                      const std::string& id) {
        check_keys(item, origin, path, {"id", "node", "p_min", "p_max", "c1", "c2", "c3"});
        CoalGenerator g;
        g.id = id;
        g.node = string_at(item, origin, path, "node");
        g.p_min = number_at(item, origin, path, "p_min");
        g.p_max = number_at(item, origin, path, "p_max");
        g.c1 = number_at(item, origin, path, "c1");
        g.c2 = number_at(item, origin, path, "c2");
        g.c3 = number_at(item, origin, path, "c3");
        sys.coal_generators.push_back(g);
    });
    parse_section(doc, origin, "gas_fired_generators", [&](const json& item, const std::string& path,
                                                           const std::string& id) {
        check_keys(item, origin, path, {"id", "power_node", "gas_node", "g_min", "g_max", "chi"});
        GasFiredGenerator g;
        g.id = id;
        g.power_node = string_at(item, origin, path, "power_node");
        g.gas_node = string_at(item, origin, path, "gas_node");
        g.g_min = number_at(item, origin, path, "g_min");
        g.g_max = number_at(item, origin, path, "g_max");
        g.chi = number_at(item, origin, path, "chi");
        sys.gas_generators.push_back(g);
    });
    parse_section(doc, origin, "gas_nodes", [&](const json& item, const std::string& path,
                                                const std::string& id) {
        check_keys(item, origin, path, {"id", "pi_min", "pi_max"});
        GasNode n;
        n.id = id;
        n.pi_min = number_at(item, origin, path, "pi_min");
        n.pi_max = number_at(item, origin, path, "pi_max");
        sys.gas_nodes.push_back(n);
    });
    parse_section(doc, origin, "pipelines", [&](const json& item, const std::string& path,
                                                const std::string& id) {
        check_keys(item, origin, path, {"id", "from", "to", "weymouth"},
                   {"g_cap_min", "g_cap_max", "fixed_direction"});
        GasPipeline p;
        p.id = id;
        p.from_node = string_at(item, origin, path, "from");
        p.to_node = string_at(item, origin, path, "to");
        p.weymouth = number_at(item, origin, path, "weymouth");
        if (item.contains("g_cap_min")) p.g_cap_min = number_at(item, origin, path, "g_cap_min");
        if (item.contains("g_cap_max")) p.g_cap_max = number_at(item, origin, path, "g_cap_max");
        if (item.contains("fixed_direction")) {
            if (!item.at("fixed_direction").is_boolean())
                fail(origin, path + "/fixed_direction", "expected a boolean");
            p.fixed_direction = item.at("fixed_direction").get<bool>();
        }
        sys.pipelines.push_back(p);
    });
    parse_section(doc, origin, "compressors", [&](const json& item, const std::string& path,
                                                  const std::string& id) {
        check_keys(item, origin, path, {"id", "from", "to", "alpha", "g_cap"});
        GasCompressor c;
        c.id = id;
        c.from_node = string_at(item, origin, path, "from");
        c.to_node = string_at(item, origin, path, "to");
        c.alpha = number_at(item, origin, path, "alpha");
        c.g_cap = number_at(item, origin, path, "g_cap");
        sys.compressors.push_back(c);
    });
    parse_section(doc, origin, "wells", [&](const json& item, const std::string& path,
                                            const std::string& id) {
        check_keys(item, origin, path, {"id", "node", "g_min", "g_max", "cost"});
        GasWell w;
        w.id = id;
        w.node = string_at(item, origin, path, "node");
        w.g_min = number_at(item, origin, path, "g_min");
        w.g_max = number_at(item, origin, path, "g_max");
        w.cost = number_at(item, origin, path, "cost");
        sys.wells.push_back(w);
    });
    parse_section(doc, origin, "loads", [&](const json& item, const std::string& path,
                                            const std::string& id) {
        check_keys(item, origin, path, {"id", "node", "kind", "amount"});
        Load l;
        l.id = id;
        l.node = string_at(item, origin, path, "node");
        const std::string kind = string_at(item, origin, path, "kind");
        if (kind == "power")
            l.kind = LoadKind::Power;
        else if (kind == "gas")
            l.kind = LoadKind::Gas;
        else
            fail(origin, path + "/kind", "expected \"power\" or \"gas\"");
        l.amount = number_at(item, origin, path, "amount");
        sys.loads.push_back(l);
    });
    return sys;
}

IegsSystem load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_network(buffer.str(), path.string());
}

std::string serialize_network(const IegsSystem& sys) {
    json doc;
    doc["format"] = kFormatName;
    doc["version"] = kFormatVersion;
    doc["units"] = expected_units();

    auto sorted = [](auto items) {
        std::sort(items.begin(), items.end(),
                  [](const auto& a, const auto& b) { return a.id < b.id; });
        return items;
    };

    json power_nodes = json::array();
    for (const auto& n : sorted(sys.power_nodes)) {
        power_nodes.push_back({{"id", n.id},
                               {"region", n.block_id},
                               {"theta_min", canonical_number(n.theta_min)},
                               {"theta_max", canonical_number(n.theta_max)}});
    }
    doc["power_nodes"] = power_nodes;
    json power_lines = json::array();
    for (const auto& l : sorted(sys.power_lines)) {
        power_lines.push_back({{"id", l.id},
                               {"from", l.from_node},
                               {"to", l.to_node},
                               {"x", canonical_number(l.x)},
                               {"p_cap", canonical_number(l.p_cap)}});
    }
    doc["power_lines"] = power_lines;
    json coal = json::array();
    for (const auto& g : sorted(sys.coal_generators)) {
        coal.push_back({{"id", g.id},
                        {"node", g.node},
                        {"p_min", canonical_number(g.p_min)},
                        {"p_max", canonical_number(g.p_max)},
                        {"c1", canonical_number(g.c1)},
                        {"c2", canonical_number(g.c2)},
                        {"c3", canonical_number(g.c3)}});
    }
    doc["coal_generators"] = coal;
    json gasgen = json::array();
    for (const auto& g : sorted(sys.gas_generators)) {
        if (g.is_virtual) continue;   // virtual components are derived, never stored
        gasgen.push_back({{"id", g.id},
                          {"power_node", g.power_node},
                          {"gas_node", g.gas_node},
                          {"g_min", canonical_number(g.g_min)},
                          {"g_max", canonical_number(g.g_max)},
                          {"chi", canonical_number(g.chi)}});
    }
    doc["gas_fired_generators"] = gasgen;
    json gas_nodes = json::array();
    for (const auto& n : sorted(sys.gas_nodes)) {
        gas_nodes.push_back({{"id", n.id},
                             {"pi_min", canonical_number(n.pi_min)},
                             {"pi_max", canonical_number(n.pi_max)}});
    }
    doc["gas_nodes"] = gas_nodes;
    json pipelines = json::array();
    for (const auto& p : sorted(sys.pipelines)) {
        json item = {{"id", p.id},
                     {"from", p.from_node},
                     {"to", p.to_node},
                     {"weymouth", canonical_number(p.weymouth)}};
        if (p.g_cap_min) item["g_cap_min"] = canonical_number(*p.g_cap_min);
        if (p.g_cap_max) item["g_cap_max"] = canonical_number(*p.g_cap_max);
        if (p.fixed_direction) item["fixed_direction"] = true;
        pipelines.push_back(item);
    }
    doc["pipelines"] = pipelines;
    json compressors = json::array();
    for (const auto& c : sorted(sys.compressors)) {
        compressors.push_back({{"id", c.id},
                               {"from", c.from_node},
                               {"to", c.to_node},
                               {"alpha", canonical_number(c.alpha)},
                               {"g_cap", canonical_number(c.g_cap)}});
    }
    doc["compressors"] = compressors;
    json wells = json::array();
    for (const auto& w : sorted(sys.wells)) {
        wells.push_back({{"id", w.id},
                         {"node", w.node},
                         {"g_min", canonical_number(w.g_min)},
                         {"g_max", canonical_number(w.g_max)},
                         {"cost", canonical_number(w.cost)}});
    }
    doc["wells"] = wells;
    json loads = json::array();
    for (const auto& l : sorted(sys.loads)) {
        loads.push_back({{"id", l.id},
                         {"node", l.node},
                         {"kind", l.kind == LoadKind::Power ? "power" : "gas"},
                         {"amount", canonical_number(l.amount)}});
    }
    doc["loads"] = loads;
    return doc.dump(2) + "\n";
}

void save_network(const IegsSystem& sys, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << serialize_network(sys);
}

std::map<std::string, int> region_map(const IegsSystem& sys) {
    std::map<std::string, int> regions;
    for (const auto& node : sys.power_nodes)
        if (!node.is_virtual) regions[node.id] = node.block_id;
    return regions;
}

std::string to_string(SolveMode m) {
    switch (m) {
        case SolveMode::Jacobi: return "jacobi";
        case SolveMode::Gauss: return "gauss";
        case SolveMode::Centralized: return "centralized";
    }
    return "unknown";
}

int ResultReport::exit_code() const {
    if (solve_status != JadmmStatus::Converged) return 3;
    return recovery.status == RecoveryStatus::Recovered ? 0 : 2;
}

std::string ResultReport::to_json() const {
    json doc;
    doc["mode"] = oef::to_string(mode);
    doc["status"] = oef::to_string(solve_status);
    doc["iterations"] = iterations;
    doc["wall_ms"] = wall_ms;
    doc["objective"] = objective;
    doc["exit_code"] = exit_code();
    if (!failed_block.empty()) doc["failed_block"] = failed_block;
    json sol = json::object();
    for (const auto& [name, value] : solution.values) sol[name] = value;
    doc["solution"] = sol;
    doc["coupling_residuals"] = coupling_residuals;
    doc["weymouth_feasible"] = weymouth_feasible;
    json rec;
    rec["status"] = oef::to_string(recovery.status);
    rec["objective"] = recovery.objective;
    rec["note"] = recovery.note;
    rec["pressure_squares"] = recovery.pressure_squares;
    rec["slack_upper"] = recovery.slack_upper;
    rec["slack_lower"] = recovery.slack_lower;
    doc["recovery"] = rec;
    json ver;
    ver["pass"] = verification.pass;
    ver["max_violation"] = verification.max_violation;
    json worst = json::array();
    for (size_t i = 0; i < verification.violations.size() && i < 10; ++i)
        worst.push_back({{"what", verification.violations[i].what},
                         {"violation", verification.violations[i].violation}});
    ver["worst"] = worst;
    doc["verification"] = ver;
    json cfg;
    cfg["mode"] = oef::to_string(config.mode);
    cfg["d"] = config.jadmm.d;
    cfg["gamma"] = config.jadmm.gamma;
    cfg["p_factor"] = config.jadmm.p_factor;
    cfg["eps_primal"] = config.jadmm.eps_primal;
    cfg["eps_dual"] = config.jadmm.eps_dual;
    cfg["max_iterations"] = config.jadmm.max_iterations;
    cfg["threads"] = config.jadmm.threads;
    doc["config"] = cfg;
    return doc.dump(2) + "\n";
}

ResultReport cmd_solve(const IegsSystem& sys, const SolveOptions& opts, ResidualTrace* trace_out) {
    const auto t0 = std::chrono::steady_clock::now();
    ValidationReport vr = validate_system(sys);
    if (!vr.ok()) throw std::runtime_error("invalid system:\n" + vr.to_string());

    const auto relaxations = build_relaxations(sys);
    BlockPartition part = decouple(sys, region_map(sys));
    const auto couplings = coupling_constraints(part);
    const ScalingPlan scaling = default_scaling(part, couplings);
    const CompactForm cf = assemble_compact(part, couplings, scaling, relaxations);

    ResultReport rep;
    rep.mode = opts.mode;
    rep.config = opts;

    std::vector<Vector> block_x;
    if (opts.mode == SolveMode::Centralized) {
        QpSettings qs;
        qs.tolerance = opts.central_tolerance;
        SolveReport sr = solve_centralized(cf, qs);
        rep.iterations = sr.iterations;
        switch (sr.status) {
            case SolveStatus::Optimal: rep.solve_status = JadmmStatus::Converged; break;
            case SolveStatus::MaxIter: rep.solve_status = JadmmStatus::MaxIter; break;
            case SolveStatus::InfeasibleDetected:
                rep.solve_status = JadmmStatus::BlockInfeasible;
                rep.failed_block = "joint";
                break;
        }
        block_x = split_solution(cf, sr.solution);
        rep.objective = 0.0;
        for (int r = 0; r < cf.num_blocks(); ++r)
            rep.objective += cf.blocks[r].problem.objective_value(block_x[r]);
    } else {
        JadmmConfig cfg = opts.jadmm;
        cfg.mode = opts.mode == SolveMode::Gauss ? IterationMode::GaussSeidel : IterationMode::Jacobi;
        JadmmResult jr = run_jadmm(cf, cfg);
        rep.solve_status = jr.status;
        rep.iterations = jr.iterations;
        rep.objective = jr.objective;
        rep.failed_block = jr.failed_block;
        if (trace_out) *trace_out = jr.trace;
        block_x = jr.state.block_x;
    }
    rep.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (block_x.empty() || rep.solve_status == JadmmStatus::BlockInfeasible) return rep;

    rep.solution = to_physical(cf, block_x);
    Vector coupling_res = -cf.rhs;
    for (int r = 0; r < cf.num_blocks(); ++r) coupling_res += cf.blocks[r].coupling * block_x[r];
    rep.coupling_residuals.assign(coupling_res.begin(), coupling_res.end());

    // Exact-Weymouth feasibility of the convexified solution.
    rep.weymouth_feasible = true;
    for (const auto& pipe : part.system.pipelines) {
        const double g = rep.solution.at("pipe:" + pipe.id);
        const double dpi =
            rep.solution.at("pi:" + pipe.from_node) - rep.solution.at("pi:" + pipe.to_node);
        const double resid = weymouth_residual(pipe, g, rep.solution.at("pi:" + pipe.from_node),
                                               rep.solution.at("pi:" + pipe.to_node));
        const double scale = std::max({1.0, g * g, pipe.weymouth * std::abs(dpi)});
        if (std::abs(resid) / scale > opts.verify_tolerance) rep.weymouth_feasible = false;
    }

    rep.recovery = check_and_recover(rep.solution, part.system);
    const PhysicalSolution verified = rep.recovery.status == RecoveryStatus::Infeasible
                                          ? rep.solution
                                          : apply_recovery(rep.solution, rep.recovery);
    rep.verification = verify_original(verified, part.system, opts.verify_tolerance);
    return rep;
}

std::string SweepResult::format_table() const {
    std::ostringstream out;
    out << "d \\ gamma";
    for (double g : gamma_values) out << "\t" << g;
    out << "\n";
    size_t idx = 0;
    for (double d : d_values) {
        out << d;
        for (size_t j = 0; j < gamma_values.size(); ++j, ++idx) {
            const auto& cell = cells[idx];
            out << "\t";
            if (cell.over_budget)
                out << ">budget";
            else if (cell.status == JadmmStatus::Converged)
                out << cell.iterations << " it/" << static_cast<int>(cell.wall_ms) << " ms";
            else
                out << oef::to_string(cell.status);
        }
        out << "\n";
    }
    return out.str();
}

SweepResult cmd_sweep(const IegsSystem& sys, const std::vector<double>& d_values,
                      const std::vector<double>& gamma_values, const SolveOptions& base,
                      double budget_seconds) {
    if (d_values.empty() || gamma_values.empty())
        throw std::invalid_argument("sweep: parameter lists must be nonempty");
    ValidationReport vr = validate_system(sys);
    if (!vr.ok()) throw std::runtime_error("invalid system:\n" + vr.to_string());

    const auto relaxations = build_relaxations(sys);
    BlockPartition part = decouple(sys, region_map(sys));
    const auto couplings = coupling_constraints(part);
    const CompactForm cf = assemble_compact(part, couplings, default_scaling(part, couplings),
                                            relaxations);

    SweepResult result;
    result.d_values = d_values;
    result.gamma_values = gamma_values;
    for (double d : d_values) {
        for (double gamma : gamma_values) {
            JadmmConfig cfg = base.jadmm;
            cfg.d = d;
            cfg.gamma = gamma;
            cfg.mode = base.mode == SolveMode::Gauss ? IterationMode::GaussSeidel
                                                     : IterationMode::Jacobi;
            const auto cell_start = std::chrono::steady_clock::now();
            auto budget = [&] {
                return std::chrono::duration<double>(std::chrono::steady_clock::now() - cell_start)
                           .count() > budget_seconds;
            };
            JadmmResult jr = run_jadmm(cf, cfg, budget);
            SweepCell cell;
            cell.d = d;
            cell.gamma = gamma;
            cell.status = jr.status;
            cell.iterations = jr.iterations;
            cell.wall_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - cell_start)
                               .count();
            cell.over_budget = jr.status == JadmmStatus::BudgetExceeded;
            result.cells.push_back(cell);
        }
    }
    return result;
}

std::string ScanResult::format_table() const {
    std::ostringstream out;
    out << "scale\tportion\tfeasibility\trecoverability\tobjective\tstatus\n";
    for (const auto& row : rows) {
        out << row.scale << "\t";
        if (!row.solved) {
            out << "-\t-\t-\t-\t" << row.status << "\n";
            continue;
        }
        char portion[16];
        std::snprintf(portion, sizeof(portion), "%.3f", row.portion);
        out << portion << "\t" << (row.weymouth_feasible ? "F" : "IF") << "\t"
            << (row.recovered ? "Y" : "N") << "\t" << row.objective << "\t" << row.status << "\n";
    }
    return out.str();
}

ScanResult cmd_scan_loads(const IegsSystem& sys, const std::vector<double>& scales,
                          const SolveOptions& base) {
    ScanResult result;
    for (double scale : scales) {
        if (scale <= 0.0) throw std::invalid_argument("scan: scales must be positive");
        IegsSystem scaled = sys;
        for (auto& load : scaled.loads) load.amount *= scale;

        ScanRow row;
        row.scale = scale;
        try {
            ResultReport rep = cmd_solve(scaled, base);
            row.status = oef::to_string(rep.solve_status);
            if (rep.solve_status == JadmmStatus::Converged) {
                row.solved = true;
                row.objective = rep.objective;
                row.weymouth_feasible = rep.weymouth_feasible;
                row.recovered = rep.recovery.status == RecoveryStatus::Recovered;
                double output = 0.0, capacity = 0.0;
                for (const auto& well : scaled.wells) {
                    output += rep.solution.at("w:" + well.id);
                    capacity += well.g_max;
                }
                row.portion = capacity > 0.0 ? output / capacity : 0.0;
            }
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
        result.rows.push_back(row);
    }
    return result;
}

}  // namespace oef
