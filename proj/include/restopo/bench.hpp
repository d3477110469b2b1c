#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "restopo/case.hpp"

namespace restopo {

// How one batch of randomized scenarios is derived from a base case:
// sources are relocated uniformly without replacement over all buses
// (0 keeps the base placement), then critical loads are drawn uniformly
// without replacement over the load buses not hosting a relocated source.
struct ScenarioSpec {
    std::uint64_t seed = 0;
    int n_scenarios = 0;
    int n_sources_to_place = 0;
    int n_critical_loads = 0;
    double critical_weight = 100.0;
    double normal_weight = 1.0;
};

// Relative optimality gap |f_star - f_x| / f_star.
double sigma(double f_star, double f_x);

// Deterministic: scenario i depends only on (spec.seed, i).
std::vector<NetworkCase> generate_scenarios(const NetworkCase& base,
                                            const ScenarioSpec& spec);

enum class Method { ih, mst, oracle };
const char* to_string(Method m);
std::optional<Method> method_from_string(const std::string& name);

struct BenchRow {
    int scenario = 0;
    Method method = Method::ih;
    double f = 0.0;
    std::optional<double> sigma; // absent when the scenario is unscored
    double n_load = 0.0;
    double p_loss = 0.0;
    std::vector<int> cut_lines; // IH: cut order; others: ascending
    double time_ms = 0.0;
    std::string status; // "ok", "unscored", or "failed:<reason>"
};

struct MethodAggregate {
    int n_ok = 0;
    int n_failed = 0;
    int n_unscored = 0;    // ok runs without an oracle score
    int same_topology = 0; // identical cut-set to the oracle's
    int near_optimum = 0;  // sigma <= report threshold
    int n_load_below = 0;  // served weighted load strictly under the oracle's
    double sigma_ave = 0.0;
    double sigma_max = 0.0;
    double t_min_ms = 0.0;
    double t_max_ms = 0.0;
    double t_ave_ms = 0.0;
};

struct BenchReport {
    std::string case_name;
    std::uint64_t seed = 0;
    int n_scenarios = 0;
    double near_optimum_threshold = 1e-4;
    std::vector<Method> methods;
    std::vector<BenchRow> rows; // scenario-major, methods in listed order
    std::map<Method, MethodAggregate> aggregates;
};

struct BenchOptions {
    double tol = 1e-8;
    long long tree_limit = 200000;
    int jobs = 1;
    bool redact_timing = false; // zero all time fields for byte-stable output
};

// Run every method on every scenario and score against the oracle when it
// is among the methods. Scenarios fan out across `jobs` workers; rows are
// reduced in scenario order, so contents are schedule-independent.
BenchReport run_benchmark(const NetworkCase& base, const ScenarioSpec& spec,
                          const std::vector<Method>& methods,
                          const BenchOptions& options = {});

// Recompute the per-method aggregates from the rows alone.
std::map<Method, MethodAggregate> compute_aggregates(const BenchReport& report);

// Row-per-(scenario,method) table; cut lines are ';'-joined inside the cell.
std::string report_csv(const BenchReport& report);

// Aggregate document (JSON text) with the category counts and timing stats.
std::string report_summary_json(const BenchReport& report, int indent = 2);

} // namespace restopo
