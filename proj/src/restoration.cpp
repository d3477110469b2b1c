#include "restopo/restoration.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>

#include <nlohmann/json.hpp>

namespace restopo {

namespace {

using Row = std::vector<std::pair<int, double>>;

void check_topology(const NetworkCase& c, const Topology& t) {
    if (t.n_buses() != static_cast<int>(c.buses.size()))
        throw ModelError("topology bus count does not match the case");
    for (const TopoEdge& e : t.lines()) {
        const Line* ln = c.line_by_id(e.line_id);
        if (!ln) throw ModelError("topology references unknown line " +
                                  std::to_string(e.line_id));
    }
}

// Shared constraint/objective assembly; n_periods picks snapshot vs
// multi-period, and only the latter receives budget and SOC rows.
QuadraticProgram build_model(const NetworkCase& c, const Topology& t, int n_periods,
                             bool with_resource_rows) {
    check_topology(c, t);
    ModelLayout lay = make_layout(c, t, n_periods);
    QpBuilder b(lay.n_vars());

    const double loss_w = c.w0 / (c.v_rate * c.v_rate);
    const int n_buses = t.n_buses();

    // Per-bus incidence and attachment tables, built once.
    std::vector<std::vector<std::pair<int, double>>> incident(n_buses); // (line_pos, sign)
    for (int lp = 0; lp < lay.n_lines(); ++lp) {
        const TopoEdge& e = t.lines()[lp];
        incident[e.from].emplace_back(lp, -1.0); // flow leaves `from`
        incident[e.to].emplace_back(lp, 1.0);    // and enters `to`
    }
    std::vector<std::vector<int>> units_at(n_buses);
    for (int u = 0; u < lay.n_units(); ++u)
        units_at[c.bus_index(lay.unit_buses[u])].push_back(u);
    std::vector<int> load_pos(n_buses, -1);
    for (int l = 0; l < lay.n_loads(); ++l)
        load_pos[c.bus_index(lay.load_buses[l])] = l;

    for (int tp = 0; tp < n_periods; ++tp) {
        // Objective: minimize -sum w_i gamma_i + w0/V^2 * sum R (P^2 + Q^2).
        for (int lp = 0; lp < lay.n_lines(); ++lp) {
            double r = c.line_by_id(lay.line_ids[lp])->resistance;
            b.add_quad(lay.p_flow(tp, lp), loss_w * r);
            b.add_quad(lay.q_flow(tp, lp), loss_w * r);
        }
        for (int l = 0; l < lay.n_loads(); ++l)
            b.add_linear(lay.gamma(tp, l), -lay.load_weights[l]);

        // Active and reactive balance at every bus.
        for (int bus = 0; bus < n_buses; ++bus) {
            Row p_row, q_row;
            for (auto [lp, sign] : incident[bus]) {
                p_row.emplace_back(lay.p_flow(tp, lp), sign);
                q_row.emplace_back(lay.q_flow(tp, lp), sign);
            }
            for (int u : units_at[bus]) {
                p_row.emplace_back(lay.p_unit(tp, u), 1.0);
                q_row.emplace_back(lay.q_unit(tp, u), 1.0);
            }
            if (load_pos[bus] >= 0) {
                int g = lay.gamma(tp, load_pos[bus]);
                p_row.emplace_back(g, -c.p_load_at(bus, tp));
                q_row.emplace_back(g, -c.q_load_at(bus, tp));
            }
            b.add_eq(p_row, 0.0);
            b.add_eq(q_row, 0.0);
        }

        // Thermal limit |P| <= p_max, two one-sided rows per line.
        for (int lp = 0; lp < lay.n_lines(); ++lp) {
            double cap = c.line_by_id(lay.line_ids[lp])->p_max;
            b.add_ineq({{lay.p_flow(tp, lp), 1.0}}, cap);
            b.add_ineq({{lay.p_flow(tp, lp), -1.0}}, cap);
        }

        // Capacity bounds.
        int n_src = static_cast<int>(c.sources.size());
        for (int u = 0; u < lay.n_units(); ++u) {
            double lo = 0.0, p_hi, q_hi;
            if (u < n_src) {
                p_hi = c.sources[u].p_max;
                q_hi = c.sources[u].q_max;
            } else {
                const Storage& st = c.storages[u - n_src];
                lo = st.p_min;
                p_hi = st.p_max;
                q_hi = st.q_max;
            }
            b.set_bounds(lay.p_unit(tp, u), lo, p_hi);
            b.set_bounds(lay.q_unit(tp, u), 0.0, q_hi);
        }
        for (int l = 0; l < lay.n_loads(); ++l)
            b.set_bounds(lay.gamma(tp, l), 0.0, 1.0);
    }

    if (with_resource_rows) {
        const double dt = c.periods.interval_hours;
        int n_src = static_cast<int>(c.sources.size());
        for (int u = 0; u < n_src; ++u) {
            if (!c.sources[u].energy_budget) continue;
            for (int tp = 0; tp < n_periods; ++tp) {
                Row row;
                for (int tau = 0; tau <= tp; ++tau)
                    row.emplace_back(lay.p_unit(tau, u), dt);
                b.add_ineq(row, *c.sources[u].energy_budget);
            }
        }
        for (std::size_t s = 0; s < c.storages.size(); ++s) {
            const Storage& st = c.storages[s];
            int u = n_src + static_cast<int>(s);
            for (int tp = 0; tp < n_periods; ++tp) {
                Row up, down;
                for (int tau = 0; tau <= tp; ++tau) {
                    up.emplace_back(lay.p_unit(tau, u), st.rho * dt);
                    down.emplace_back(lay.p_unit(tau, u), -st.rho * dt);
                }
                b.add_ineq(up, st.soc_max - st.soc_init);
                b.add_ineq(down, st.soc_init - st.soc_min);
            }
        }
    }

    return b.build();
}

} // namespace

double DispatchSolution::flow_magnitude(int line_id) const {
    for (int lp = 0; lp < layout.n_lines(); ++lp) {
        if (layout.line_ids[lp] != line_id) continue;
        double m = 0.0;
        for (const auto& p : flow_p) m += std::abs(p[lp]);
        return m;
    }
    throw ModelError("flow_magnitude: line " + std::to_string(line_id) +
                     " not in dispatch");
}

Topology full_topology(const NetworkCase& c) {
    std::vector<TopoEdge> edges;
    edges.reserve(c.lines.size());
    for (const Line& ln : c.lines)
        edges.push_back({ln.id, c.bus_index(ln.from_bus), c.bus_index(ln.to_bus)});
    return Topology(static_cast<int>(c.buses.size()), std::move(edges));
}

ModelLayout make_layout(const NetworkCase& c, const Topology& t, int n_periods) {
    ModelLayout lay;
    lay.n_periods = n_periods;
    lay.line_ids = t.line_ids();
    for (const Source& s : c.sources) {
        lay.unit_buses.push_back(s.bus);
        lay.unit_is_storage.push_back(false);
    }
    for (const Storage& s : c.storages) {
        lay.unit_buses.push_back(s.bus);
        lay.unit_is_storage.push_back(true);
    }
    for (const Bus& bus : c.buses) {
        if (!bus.is_load) continue;
        lay.load_buses.push_back(bus.id);
        lay.load_weights.push_back(bus.weight);
    }
    return lay;
}

QuadraticProgram build_clr_mesh(const NetworkCase& c, const Topology& t) {
    return build_model(c, t, 1, false);
}

QuadraticProgram build_mpclr_mesh(const NetworkCase& c, const Topology& t) {
    return build_model(c, t, c.periods.n_periods, true);
}

DispatchSolution evaluate(const NetworkCase& c, const Topology& t, double tol) {
    if (!is_connected(t)) throw GraphError("evaluate: topology is disconnected");
    const bool multi = c.periods.n_periods > 1;
    const int T = multi ? c.periods.n_periods : 1;

    auto t0 = std::chrono::steady_clock::now();
    QuadraticProgram qp = multi ? build_mpclr_mesh(c, t) : build_clr_mesh(c, t);
    QpSolveOptions opt;
    opt.tol = tol;
    QpSolution sol = solve_qp(qp, opt);
    auto t1 = std::chrono::steady_clock::now();

    DispatchSolution d;
    d.status = sol.status;
    d.residuals = sol.residuals;
    d.qp_iterations = sol.iterations;
    d.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    d.layout = make_layout(c, t, T);

    const ModelLayout& lay = d.layout;
    for (int tp = 0; tp < T; ++tp) {
        Eigen::VectorXd P(lay.n_lines()), Q(lay.n_lines());
        for (int lp = 0; lp < lay.n_lines(); ++lp) {
            P[lp] = sol.primal[lay.p_flow(tp, lp)];
            Q[lp] = sol.primal[lay.q_flow(tp, lp)];
        }
        Eigen::VectorXd pg(lay.n_units()), qg(lay.n_units());
        for (int u = 0; u < lay.n_units(); ++u) {
            pg[u] = sol.primal[lay.p_unit(tp, u)];
            qg[u] = sol.primal[lay.q_unit(tp, u)];
        }
        Eigen::VectorXd g(lay.n_loads());
        for (int l = 0; l < lay.n_loads(); ++l) g[l] = sol.primal[lay.gamma(tp, l)];
        d.flow_p.push_back(std::move(P));
        d.flow_q.push_back(std::move(Q));
        d.p_gen.push_back(std::move(pg));
        d.q_gen.push_back(std::move(qg));
        d.gamma.push_back(std::move(g));
    }

    double n_load = 0.0, loss = 0.0;
    for (int tp = 0; tp < T; ++tp) {
        for (int l = 0; l < lay.n_loads(); ++l)
            n_load += lay.load_weights[l] * d.gamma[tp][l];
        for (int lp = 0; lp < lay.n_lines(); ++lp) {
            double r = c.line_by_id(lay.line_ids[lp])->resistance;
            loss += r * (d.flow_p[tp][lp] * d.flow_p[tp][lp] +
                         d.flow_q[tp][lp] * d.flow_q[tp][lp]);
        }
    }
    loss /= c.v_rate * c.v_rate;
    d.n_load_weighted = n_load;
    d.p_loss = loss;
    d.objective = n_load - c.w0 * loss;
    return d;
}

std::string dispatch_to_json(const DispatchSolution& d, int indent) {
    nlohmann::json j;
    j["status"] = to_string(d.status);
    j["objective"] = d.objective;
    j["n_load_weighted"] = d.n_load_weighted;
    j["p_loss"] = d.p_loss;
    j["residuals"] = {{"primal_inf", d.residuals.primal_inf},
                      {"dual_inf", d.residuals.dual_inf},
                      {"gap", d.residuals.gap}};
    j["qp_iterations"] = d.qp_iterations;
    j["solve_ms"] = d.solve_ms;
    j["n_periods"] = d.layout.n_periods;

    nlohmann::json periods = nlohmann::json::array();
    for (int tp = 0; tp < d.layout.n_periods; ++tp) {
        nlohmann::json pj;
        nlohmann::json flows = nlohmann::json::array();
        for (int lp = 0; lp < d.layout.n_lines(); ++lp)
            flows.push_back({{"line", d.layout.line_ids[lp]},
                             {"p", d.flow_p[tp][lp]},
                             {"q", d.flow_q[tp][lp]}});
        pj["flows"] = std::move(flows);
        nlohmann::json units = nlohmann::json::array();
        for (int u = 0; u < d.layout.n_units(); ++u)
            units.push_back({{"bus", d.layout.unit_buses[u]},
                             {"storage", static_cast<bool>(d.layout.unit_is_storage[u])},
                             {"p_gen", d.p_gen[tp][u]},
                             {"q_gen", d.q_gen[tp][u]}});
        pj["units"] = std::move(units);
        nlohmann::json loads = nlohmann::json::array();
        for (int l = 0; l < d.layout.n_loads(); ++l)
            loads.push_back({{"bus", d.layout.load_buses[l]},
                             {"gamma", d.gamma[tp][l]}});
        pj["loads"] = std::move(loads);
        periods.push_back(std::move(pj));
    }
    j["periods"] = std::move(periods);
    return j.dump(indent);
}

} // namespace restopo
