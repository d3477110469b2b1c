#include <doctest.h>

#include <nlohmann/json.hpp>

#include "restopo/restoration.hpp"
#include "util.hpp"

using namespace restopo;

namespace {

// Lossless balance rows make generation equal served demand exactly; the
// resistive term lives only in the objective.
void check_conservation(const NetworkCase& c, const DispatchSolution& d,
                        double tol = 1e-7) {
    for (int t = 0; t < d.layout.n_periods; ++t) {
        double gen = d.p_gen[t].sum();
        double served = 0.0;
        for (int k = 0; k < d.layout.n_loads(); ++k) {
            int pos = c.bus_index(d.layout.load_buses[k]);
            served += d.gamma[t][k] * c.p_load_at(pos, t);
        }
        CAPTURE(t);
        CHECK(gen == doctest::Approx(served).scale(1.0).epsilon(tol));
    }
}

} // namespace

TEST_CASE("layout ordering and sizes") {
    NetworkCase c = testutil::fixture("mp_ring4");
    Topology t = full_topology(c);
    ModelLayout lay = make_layout(c, t, c.periods.n_periods);

    CHECK(lay.n_periods == 3);
    CHECK(lay.line_ids == std::vector<int>{1, 2, 3, 4});
    // Sources come before storages in the unit block.
    CHECK(lay.unit_buses == std::vector<int>{1, 3});
    CHECK(lay.unit_is_storage == std::vector<bool>{false, true});
    CHECK(lay.load_buses == std::vector<int>{2, 3, 4});
    CHECK(lay.load_weights == std::vector<double>{10.0, 1.0, 1.0});

    // 2*4 flows + 2*2 units + 3 gammas per period.
    CHECK(lay.period_stride() == 15);
    CHECK(lay.n_vars() == 45);
    CHECK(lay.p_flow(0, 0) == 0);
    CHECK(lay.q_flow(0, 0) == 4);
    CHECK(lay.p_unit(0, 0) == 8);
    CHECK(lay.q_unit(0, 1) == 11);
    CHECK(lay.gamma(0, 2) == 14);
    CHECK(lay.p_flow(2, 3) == 33);
    CHECK(lay.gamma(2, 0) == 42);
}

TEST_CASE("single-snapshot program has the documented shape") {
    // One line, one source, one load: 2 flows + 2 unit vars + 1 gamma.
    NetworkCase two = testutil::fixture("two_bus");
    QuadraticProgram qp = build_clr_mesh(two, full_topology(two));
    CHECK(qp.n_vars == 5);
    CHECK(qp.eq.rows() == 4);    // P and Q balance at each of 2 buses
    CHECK(qp.ineq.rows() == 2);  // |P| <= p_max split into two rows

    // 4-bus ring, 1 source, 2 loads: 8 flows + 2 unit vars + 2 gammas.
    NetworkCase ring = testutil::fixture("ring4");
    QuadraticProgram rq = build_clr_mesh(ring, full_topology(ring));
    CHECK(rq.n_vars == 12);
    CHECK(rq.eq.rows() == 8);
    CHECK(rq.ineq.rows() == 8);

    // Gammas live in [0,1]; generation in [0, p_max].
    ModelLayout lay = make_layout(ring, full_topology(ring), 1);
    int g0 = lay.gamma(0, 0);
    CHECK(rq.lower[g0] == doctest::Approx(0.0));
    CHECK(rq.upper[g0] == doctest::Approx(1.0));
    int u0 = lay.p_unit(0, 0);
    CHECK(rq.lower[u0] == doctest::Approx(0.0));
    CHECK(rq.upper[u0] == doctest::Approx(1.0)); // source p_max
}

TEST_CASE("two-bus dispatch reaches full restoration") {
    NetworkCase c = testutil::fixture("two_bus");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    CHECK(d.gamma[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d.flow_p[0][0] == doctest::Approx(0.8).epsilon(1e-6));
    CHECK(d.flow_q[0][0] == doctest::Approx(0.2).epsilon(1e-6));
    // f = 1 - w0 * r * (P^2 + Q^2) = 1 - 0.001 * 0.01 * 0.68
    CHECK(d.objective == doctest::Approx(0.9999932).epsilon(1e-9));
    CHECK(d.p_loss == doctest::Approx(0.0068).epsilon(1e-6));
    CHECK(d.n_load_weighted == doctest::Approx(1.0).epsilon(1e-9));
    check_conservation(c, d);
}

TEST_CASE("capacity deficit sheds load proportionally") {
    NetworkCase c = testutil::fixture("two_bus_deficit");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    // 0.8 of demand against 0.5 of capacity: gamma = 5/8.
    CHECK(d.gamma[0][0] == doctest::Approx(0.625).epsilon(1e-7));
    CHECK(d.objective == doctest::Approx(0.6249975).epsilon(1e-7));
    check_conservation(c, d);

    // Raising the binding capacity can only improve the objective.
    NetworkCase relaxed = c;
    relaxed.sources[0].p_max = 0.7;
    DispatchSolution d2 = evaluate(relaxed, full_topology(relaxed));
    REQUIRE(d2.status == QpStatus::optimal);
    CHECK(d2.objective >= d.objective - 1e-7);
    CHECK(d2.gamma[0][0] == doctest::Approx(0.875).epsilon(1e-6));
}

TEST_CASE("meshed ring splits flow to minimize losses") {
    NetworkCase c = testutil::fixture("ring4");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    // Equal resistances, loads 0.3 at bus 2 and 0.4 at bus 3:
    // the loss-optimal circulation puts 0.425 on line 1.
    CHECK(d.flow_p[0][0] == doctest::Approx(0.425).scale(1.0).epsilon(2e-3));
    CHECK(d.flow_p[0][1] == doctest::Approx(0.125).scale(1.0).epsilon(2e-3));
    CHECK(d.flow_p[0][2] == doctest::Approx(-0.275).scale(1.0).epsilon(2e-3));
    CHECK(d.flow_p[0][3] == doctest::Approx(-0.275).scale(1.0).epsilon(2e-3));
    CHECK(d.flow_magnitude(2) == doctest::Approx(0.125).scale(1.0).epsilon(2e-3));
    check_conservation(c, d);
}

TEST_CASE("parallel identical lines share flow equally") {
    std::string text = R"({
      "buses": [
        {"id": 1, "p_load": 0.0, "q_load": 0.0, "weight": 0.0},
        {"id": 2, "p_load": 0.8, "q_load": 0.0, "weight": 1.0}
      ],
      "lines": [
        {"id": 1, "from": 1, "to": 2, "r": 0.02, "p_max": 1.0},
        {"id": 2, "from": 1, "to": 2, "r": 0.02, "p_max": 1.0}
      ],
      "sources": [{"bus": 1, "p_max": 1.0, "q_max": 1.0}]
    })";
    NetworkCase c = parse_case(text);
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    CHECK(d.flow_p[0][0] == doctest::Approx(0.4).scale(1.0).epsilon(2e-3));
    CHECK(d.flow_p[0][1] == doctest::Approx(0.4).scale(1.0).epsilon(2e-3));
}

TEST_CASE("a case without loads is served at zero cost") {
    std::string text = R"({
      "buses": [
        {"id": 1, "p_load": 0.0, "q_load": 0.0, "weight": 0.0},
        {"id": 2, "p_load": 0.0, "q_load": 0.0, "weight": 0.0}
      ],
      "lines": [{"id": 1, "from": 1, "to": 2, "r": 0.01, "p_max": 1.0}],
      "sources": [{"bus": 1, "p_max": 1.0, "q_max": 1.0}]
    })";
    NetworkCase c = parse_case(text);
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    CHECK(d.objective == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(d.layout.n_loads() == 0);
    CHECK(std::abs(d.flow_p[0][0]) <= 1e-6);
}

TEST_CASE("opening a line never improves the meshed objective") {
    NetworkCase c = testutil::fixture("ring4");
    Topology full = full_topology(c);
    double meshed = evaluate(c, full).objective;
    // Frozen closed forms for the four spanning trees, in cut-line order
    // 4, 3, 2, 1 (trees {1,2,3}, {1,2,4}, {1,3,4}, {2,3,4}).
    const double tree_f[] = {1.9999934978763303, 1.99999349787633,
                             1.9999958999139493, 1.9999892957428689};
    int cut[] = {4, 3, 2, 1};
    for (int i = 0; i < 4; ++i) {
        DispatchSolution d = evaluate(c, full.without(cut[i]));
        REQUIRE(d.status == QpStatus::optimal);
        CHECK(d.objective == doctest::Approx(tree_f[i]).epsilon(1e-9));
        CHECK(meshed >= d.objective - 1e-7);
    }
}

TEST_CASE("single-period multi-period build matches the snapshot build") {
    for (const char* name : {"two_bus", "ring4", "two_bus_deficit"}) {
        CAPTURE(name);
        NetworkCase c = testutil::fixture(name);
        Topology t = full_topology(c);
        QpSolution a = solve_qp(build_clr_mesh(c, t), 1e-8);
        QpSolution b = solve_qp(build_mpclr_mesh(c, t), 1e-8);
        REQUIRE(a.status == QpStatus::optimal);
        REQUIRE(b.status == QpStatus::optimal);
        CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-7));
    }
}

TEST_CASE("multi-period program shape includes the resource rows") {
    NetworkCase c = testutil::fixture("mp_ring4");
    QuadraticProgram qp = build_mpclr_mesh(c, full_topology(c));
    CHECK(qp.n_vars == 45);
    CHECK(qp.eq.rows() == 24); // 3 periods x 8 balance rows
    // 24 thermal + 3 budget prefixes + 6 SOC corridor rows.
    CHECK(qp.ineq.rows() == 33);
}

TEST_CASE("energy budget binds across the horizon") {
    NetworkCase c = testutil::fixture("mp_budget");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    // 1.6 p.u.h of demand against a 1.0 p.u.h budget: serve 0.625 evenly.
    // Only the two-period sum is pinned by the budget row; the split is
    // decided by the tiny loss curvature, so it gets the loose tolerance.
    CHECK(d.gamma[0][0] == doctest::Approx(0.625).epsilon(2e-3));
    CHECK(d.gamma[1][0] == doctest::Approx(0.625).epsilon(2e-3));
    CHECK(d.gamma[0][0] + d.gamma[1][0] == doctest::Approx(1.25).epsilon(1e-6));
    double energy = (d.p_gen[0][0] + d.p_gen[1][0]) * c.periods.interval_hours;
    CHECK(energy <= 1.0 + 1e-7);
    CHECK(d.objective == doctest::Approx(1.249995).epsilon(1e-9));
    check_conservation(c, d);
}

TEST_CASE("storage respects its corridor while discharging") {
    NetworkCase c = testutil::fixture("mp_storage");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    // Discharge headroom (0.5 - 0.2) / 0.25 = 1.2 p.u.h split evenly; as in
    // the budget case only the sum is pinned, the split is loss-curvature
    // noise.
    CHECK(d.gamma[0][0] == doctest::Approx(0.75).epsilon(2e-3));
    CHECK(d.gamma[1][0] == doctest::Approx(0.75).epsilon(2e-3));
    CHECK(d.gamma[0][0] + d.gamma[1][0] == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(d.p_gen[0][0] == doctest::Approx(0.6).epsilon(2e-3));

    const Storage& s = c.storages[0];
    double soc = s.soc_init;
    for (int t = 0; t < 2; ++t) {
        soc += s.rho * d.p_gen[t][0] * c.periods.interval_hours;
        CHECK(soc >= s.soc_min - 1e-7);
        CHECK(soc <= s.soc_max + 1e-7);
    }
    CHECK(soc == doctest::Approx(0.2).epsilon(1e-5)); // ends at the floor
    CHECK(d.objective == doctest::Approx(1.4999928).epsilon(1e-9));
}

TEST_CASE("combined budget and storage case stays inside every prefix") {
    NetworkCase c = testutil::fixture("mp_ring4");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    check_conservation(c, d);

    double dt = c.periods.interval_hours;
    double source_energy = 0.0;
    double soc = c.storages[0].soc_init;
    for (int t = 0; t < 3; ++t) {
        source_energy += d.p_gen[t][0] * dt;
        CHECK(source_energy <= *c.sources[0].energy_budget + 1e-7);
        soc += c.storages[0].rho * d.p_gen[t][1] * dt;
        CHECK(soc >= c.storages[0].soc_min - 1e-7);
        CHECK(soc <= c.storages[0].soc_max + 1e-7);
    }
    // Plenty of combined resource: the full load is restorable.
    CHECK(d.n_load_weighted == doctest::Approx(36.0).epsilon(1e-7));
}

TEST_CASE("per-period demand changes the per-period flows") {
    NetworkCase c = testutil::fixture("mp_ring4");
    Topology tree = full_topology(c).without(2);
    DispatchSolution d = evaluate(c, tree);
    REQUIRE(d.status == QpStatus::optimal);
    // Line 1 feeds bus 2 alone on this tree: its flow tracks the demand.
    CHECK(d.flow_p[0][0] == doctest::Approx(0.30).scale(1.0).epsilon(5e-3));
    CHECK(d.flow_p[1][0] == doctest::Approx(0.35).scale(1.0).epsilon(5e-3));
    CHECK(d.flow_p[2][0] == doctest::Approx(0.25).scale(1.0).epsilon(5e-3));
}

TEST_CASE("evaluate rejects malformed topologies") {
    NetworkCase c = testutil::fixture("ring4");
    Topology full = full_topology(c);

    // Disconnected: two opposite lines opened.
    CHECK_THROWS_AS(evaluate(c, full.without(1).without(3)), GraphError);

    // Wrong bus count for this case.
    CHECK_THROWS_AS(evaluate(c, Topology(3, {{1, 0, 1}, {2, 1, 2}})), ModelError);

    // A line id the case does not know.
    CHECK_THROWS_AS(evaluate(c, Topology(4, {{9, 0, 1}, {2, 1, 2}, {3, 2, 3}})),
                    ModelError);
}

TEST_CASE("flow magnitude sums absolute flow over periods") {
    NetworkCase c = testutil::fixture("mp_budget");
    DispatchSolution d = evaluate(c, full_topology(c));
    REQUIRE(d.status == QpStatus::optimal);
    double expect = std::abs(d.flow_p[0][0]) + std::abs(d.flow_p[1][0]);
    CHECK(d.flow_magnitude(1) == doctest::Approx(expect).epsilon(1e-12));
    CHECK_THROWS_AS(d.flow_magnitude(99), ModelError);
}

TEST_CASE("dispatch renders to a parseable document") {
    NetworkCase c = testutil::fixture("ring4");
    DispatchSolution d = evaluate(c, full_topology(c));
    nlohmann::json j = nlohmann::json::parse(dispatch_to_json(d));
    CHECK(j["status"] == "optimal");
    CHECK(j["n_periods"] == 1);
    CHECK(j["objective"].get<double>() == doctest::Approx(d.objective));
    REQUIRE(j["periods"].size() == 1);
    CHECK(j["periods"][0]["flows"].size() == 4);
    CHECK(j["periods"][0]["loads"].size() == 2);
    CHECK(j["periods"][0]["units"][0]["bus"] == 1);
    CHECK(j["residuals"].contains("gap"));
}
