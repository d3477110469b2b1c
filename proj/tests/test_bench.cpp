#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restopo/bench.hpp"
#include "restopo/restoration.hpp"
#include "util.hpp"

using namespace restopo;

namespace {

void check_same_aggregate(const MethodAggregate& a, const MethodAggregate& b) {
    CHECK(a.n_ok == b.n_ok);
    CHECK(a.n_failed == b.n_failed);
    CHECK(a.n_unscored == b.n_unscored);
    CHECK(a.same_topology == b.same_topology);
    CHECK(a.near_optimum == b.near_optimum);
    CHECK(a.n_load_below == b.n_load_below);
    CHECK(a.sigma_ave == doctest::Approx(b.sigma_ave).epsilon(1e-12));
    CHECK(a.sigma_max == doctest::Approx(b.sigma_max).epsilon(1e-12));
}

} // namespace

TEST_CASE("relative gap") {
    CHECK(sigma(100.0, 100.0) == doctest::Approx(0.0));
    CHECK(sigma(100.0, 99.99) == doctest::Approx(1e-4));
    CHECK(sigma(50.0, 49.95) == doctest::Approx(1e-3));
    CHECK(sigma(2.0, 2.5) == doctest::Approx(0.25)); // magnitude, either side
    CHECK_THROWS_AS(sigma(0.0, 1.0), std::domain_error);
}

TEST_CASE("method names round trip") {
    for (Method m : {Method::ih, Method::mst, Method::oracle})
        CHECK(method_from_string(to_string(m)) == m);
    CHECK(!method_from_string("annealing").has_value());
}

TEST_CASE("scenario generation is deterministic in (seed, index)") {
    NetworkCase base = testutil::fixture("family12");
    ScenarioSpec spec;
    spec.seed = 99;
    spec.n_scenarios = 8;
    spec.n_sources_to_place = 1;
    spec.n_critical_loads = 3;

    std::vector<NetworkCase> a = generate_scenarios(base, spec);
    std::vector<NetworkCase> b = generate_scenarios(base, spec);
    REQUIRE(a.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(serialize_case(a[i]) == serialize_case(b[i]));

    // A prefix of a longer batch is the shorter batch: index keys the stream.
    spec.n_scenarios = 3;
    std::vector<NetworkCase> c = generate_scenarios(base, spec);
    for (int i = 0; i < 3; ++i) CHECK(serialize_case(a[i]) == serialize_case(c[i]));

    // A different seed moves at least one scenario.
    spec.n_scenarios = 8;
    spec.seed = 100;
    std::vector<NetworkCase> d = generate_scenarios(base, spec);
    bool any_diff = false;
    for (int i = 0; i < 8; ++i)
        if (serialize_case(a[i]) != serialize_case(d[i])) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("scenarios relocate sources and retag critical loads") {
    NetworkCase base = testutil::fixture("family12");
    ScenarioSpec spec;
    spec.seed = 7;
    spec.n_scenarios = 20;
    spec.n_sources_to_place = 2;
    spec.n_critical_loads = 3;
    spec.critical_weight = 100.0;
    spec.normal_weight = 1.0;

    for (const NetworkCase& sc : generate_scenarios(base, spec)) {
        REQUIRE(sc.sources.size() == 2);
        std::set<int> hosts;
        for (const Source& s : sc.sources) hosts.insert(s.bus);
        CHECK(hosts.size() == 2); // distinct buses

        int critical = 0;
        for (const Bus& b : sc.buses) {
            if (!b.is_load) continue;
            CHECK((b.weight == 100.0 || b.weight == 1.0));
            if (b.weight == 100.0) {
                ++critical;
                CHECK(!hosts.count(b.id)); // never on a source bus
            }
        }
        CHECK(critical == 3);
        CHECK(validate(sc).empty());
    }
}

TEST_CASE("zero placements keep the base layout") {
    NetworkCase base = testutil::fixture("family12");
    ScenarioSpec spec;
    spec.seed = 1;
    spec.n_scenarios = 2;
    std::vector<NetworkCase> out = generate_scenarios(base, spec);
    REQUIRE(out.size() == 2);
    CHECK(out[0].sources.size() == base.sources.size());
    CHECK(out[0].sources[0].bus == base.sources[0].bus);
    for (std::size_t i = 0; i < base.buses.size(); ++i)
        CHECK(out[0].buses[i].weight == base.buses[i].weight);
}

TEST_CASE("scenario spec limits are enforced") {
    NetworkCase base = testutil::fixture("family12");
    ScenarioSpec spec;
    spec.n_scenarios = 1;
    spec.n_sources_to_place = 1000;
    CHECK_THROWS_AS(generate_scenarios(base, spec), std::invalid_argument);

    spec.n_sources_to_place = 0;
    spec.n_critical_loads = 1000;
    CHECK_THROWS_AS(generate_scenarios(base, spec), std::invalid_argument);

    NetworkCase no_src = base;
    no_src.sources.clear();
    spec.n_sources_to_place = 1;
    spec.n_critical_loads = 0;
    CHECK_THROWS_AS(generate_scenarios(no_src, spec), std::invalid_argument);
}

TEST_CASE("benchmark rows are scenario-major and scored against the oracle") {
    NetworkCase base = testutil::fixture("family12");
    ScenarioSpec spec;
    spec.seed = 4242;
    spec.n_scenarios = 6;
    spec.n_sources_to_place = 1;
    spec.n_critical_loads = 2;
    std::vector<Method> methods{Method::ih, Method::mst, Method::oracle};

    BenchReport rep = run_benchmark(base, spec, methods, {});
    CHECK(rep.case_name == "family12");
    CHECK(rep.near_optimum_threshold == doctest::Approx(1e-4));
    REQUIRE(rep.rows.size() == 18);
    for (int i = 0; i < 6; ++i) {
        for (int k = 0; k < 3; ++k) {
            const BenchRow& r = rep.rows[i * 3 + k];
            CHECK(r.scenario == i);
            CHECK(r.method == methods[k]);
            REQUIRE(r.status == "ok");
            REQUIRE(r.sigma.has_value());
            CHECK(*r.sigma >= 0.0);
        }
        // The oracle scores itself at exactly zero.
        CHECK(*rep.rows[i * 3 + 2].sigma == 0.0);
        // No method can beat the enumerated optimum.
        CHECK(rep.rows[i * 3 + 0].f <= rep.rows[i * 3 + 2].f + 1e-9);
        CHECK(rep.rows[i * 3 + 1].f <= rep.rows[i * 3 + 2].f + 1e-9);
    }

    // Aggregates are a pure function of the rows.
    auto again = compute_aggregates(rep);
    for (Method m : methods) {
        CAPTURE(to_string(m));
        check_same_aggregate(rep.aggregates.at(m), again.at(m));
        const MethodAggregate& a = rep.aggregates.at(m);
        CHECK(a.n_ok + a.n_failed == 6);
        CHECK(a.near_optimum <= a.n_ok - a.n_unscored);
        CHECK(a.same_topology <= a.n_ok);
        CHECK(a.t_min_ms <= a.t_max_ms);
    }
    CHECK(rep.aggregates.at(Method::oracle).near_optimum == 6);
    CHECK(rep.aggregates.at(Method::oracle).same_topology == 6);
}

TEST_CASE("worker count does not change the report contents") {
    NetworkCase base = testutil::fixture("family12");
    ScenarioSpec spec;
    spec.seed = 31337;
    spec.n_scenarios = 8;
    spec.n_sources_to_place = 1;
    spec.n_critical_loads = 2;
    std::vector<Method> methods{Method::ih, Method::oracle};

    BenchOptions serial;
    serial.redact_timing = true;
    BenchOptions parallel = serial;
    parallel.jobs = 4;

    BenchReport a = run_benchmark(base, spec, methods, serial);
    BenchReport b = run_benchmark(base, spec, methods, parallel);
    CHECK(report_csv(a) == report_csv(b));
    CHECK(report_summary_json(a) == report_summary_json(b));

    // And the redacted run is reproducible byte for byte.
    BenchReport c = run_benchmark(base, spec, methods, serial);
    CHECK(report_csv(a) == report_csv(c));
}

TEST_CASE("without an oracle no row carries a score") {
    NetworkCase base = testutil::fixture("ring4");
    ScenarioSpec spec;
    spec.seed = 5;
    spec.n_scenarios = 3;
    BenchReport rep = run_benchmark(base, spec, {Method::ih, Method::mst}, {});
    REQUIRE(rep.rows.size() == 6);
    for (const BenchRow& r : rep.rows) {
        CHECK(!r.sigma.has_value());
        CHECK(r.status == "ok");
    }
    CHECK(rep.aggregates.at(Method::ih).n_unscored == 3);
}

TEST_CASE("an oracle tree cap marks the scenario unscored") {
    NetworkCase base = testutil::fixture("mesh32"); // far beyond a cap of 3
    ScenarioSpec spec;
    spec.seed = 2;
    spec.n_scenarios = 1;
    BenchOptions opt;
    opt.tree_limit = 3;
    BenchReport rep =
        run_benchmark(base, spec, {Method::ih, Method::oracle}, opt);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].status == "unscored"); // ih ran fine but has no reference
    CHECK(!rep.rows[0].sigma.has_value());
    CHECK(rep.rows[1].status == "unscored");
    CHECK(rep.aggregates.at(Method::oracle).n_unscored == 1);
}

TEST_CASE("multi-period bases use the looser near-optimum threshold") {
    NetworkCase base = testutil::fixture("mp_ring4");
    ScenarioSpec spec;
    spec.seed = 12;
    spec.n_scenarios = 2;
    BenchReport rep = run_benchmark(base, spec, {Method::ih, Method::oracle}, {});
    CHECK(rep.near_optimum_threshold == doctest::Approx(1e-3));
    CHECK(rep.aggregates.at(Method::ih).near_optimum == 2);
}

TEST_CASE("csv layout is stable") {
    NetworkCase base = testutil::fixture("ring4");
    ScenarioSpec spec;
    spec.seed = 77;
    spec.n_scenarios = 1;
    BenchOptions opt;
    opt.redact_timing = true;
    BenchReport rep =
        run_benchmark(base, spec, {Method::ih, Method::oracle}, opt);
    std::string csv = report_csv(rep);

    auto eol = csv.find('\n');
    CHECK(csv.substr(0, eol) ==
          "scenario,method,f,sigma,n_load,p_loss,cut_lines,time_ms,status");

    // One line per row plus the header; every line has 8 commas.
    int lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    CHECK(lines == 3);
    std::string first_row = csv.substr(eol + 1, csv.find('\n', eol + 1) - eol - 1);
    CHECK(std::count(first_row.begin(), first_row.end(), ',') == 8);
    CHECK(first_row.substr(0, 5) == "0,ih,");
    CHECK(first_row.find(",0.000,ok") != std::string::npos); // redacted timing

    // The single mesh of this family is cut at line 2 in every run.
    CHECK(first_row.find(",2,") != std::string::npos);
}

TEST_CASE("summary document carries the aggregate block") {
    NetworkCase base = testutil::fixture("ring4");
    ScenarioSpec spec;
    spec.seed = 8;
    spec.n_scenarios = 2;
    BenchReport rep =
        run_benchmark(base, spec, {Method::ih, Method::mst, Method::oracle}, {});
    nlohmann::json j = nlohmann::json::parse(report_summary_json(rep));
    CHECK(j["case"] == "ring4");
    CHECK(j["seed"] == 8);
    CHECK(j["n_scenarios"] == 2);
    CHECK(j["near_optimum_threshold"].get<double>() == doctest::Approx(1e-4));
    for (const char* m : {"ih", "mst", "oracle"}) {
        CAPTURE(m);
        REQUIRE(j["methods"].contains(m));
        CHECK(j["methods"][m]["ok"] == 2);
        CHECK(j["methods"][m]["failed"] == 0);
        CHECK(j["methods"][m]["near_optimum"] == 2);
    }
}
