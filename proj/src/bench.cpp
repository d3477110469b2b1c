#include "restopo/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "restopo/heuristics.hpp"
#include "restopo/restoration.hpp"

namespace restopo {

double sigma(double f_star, double f_x) {
    if (f_star == 0.0) throw std::domain_error("sigma: reference objective is zero");
    return std::abs(f_star - f_x) / f_star;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::ih: return "ih";
        case Method::mst: return "mst";
        case Method::oracle: return "oracle";
    }
    return "unknown";
}

std::optional<Method> method_from_string(const std::string& name) {
    if (name == "ih") return Method::ih;
    if (name == "mst") return Method::mst;
    if (name == "oracle") return Method::oracle;
    return std::nullopt;
}

namespace {

// Scenario randomness must be identical across platforms and schedules, so
// the generator is pinned down here instead of relying on <random> engines:
// splitmix64 streams keyed by (seed, scenario index).
struct SplitMix64 {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

SplitMix64 substream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 mix{seed};
    std::uint64_t a = mix.next();
    return SplitMix64{a ^ (0xD1B54A32D192ED03ULL * (index + 1))};
}

std::uint64_t bounded(SplitMix64& rng, std::uint64_t n) {
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                          std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
        x = rng.next();
    } while (x >= limit);
    return x % n;
}

// First k entries of a partial Fisher-Yates shuffle: uniform, no repeats.
std::vector<int> sample_without_replacement(std::vector<int> pool, int k,
                                            SplitMix64& rng) {
    for (int i = 0; i < k; ++i) {
        std::uint64_t j = i + bounded(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

} // namespace

std::vector<NetworkCase> generate_scenarios(const NetworkCase& base,
                                            const ScenarioSpec& spec) {
    if (spec.n_scenarios < 0)
        throw std::invalid_argument("generate_scenarios: n_scenarios < 0");
    if (spec.n_sources_to_place < 0 ||
        spec.n_sources_to_place > static_cast<int>(base.buses.size()))
        throw std::invalid_argument(
            "generate_scenarios: n_sources_to_place exceeds bus count");
    if (spec.n_sources_to_place > 0 && base.sources.empty())
        throw std::invalid_argument(
            "generate_scenarios: base case has no source template");

    std::vector<int> all_buses, load_buses;
    for (const Bus& b : base.buses) {
        all_buses.push_back(b.id);
        if (b.is_load) load_buses.push_back(b.id);
    }
    if (spec.n_critical_loads < 0 ||
        spec.n_critical_loads > static_cast<int>(load_buses.size()))
        throw std::invalid_argument(
            "generate_scenarios: n_critical_loads exceeds load-bus count");

    std::vector<NetworkCase> out;
    out.reserve(spec.n_scenarios);
    for (int i = 0; i < spec.n_scenarios; ++i) {
        SplitMix64 rng = substream(spec.seed, static_cast<std::uint64_t>(i));
        NetworkCase sc = base;

        if (spec.n_sources_to_place > 0) {
            std::vector<int> placed =
                sample_without_replacement(all_buses, spec.n_sources_to_place, rng);
            sc.sources.clear();
            for (int k = 0; k < spec.n_sources_to_place; ++k) {
                Source s = base.sources[k % base.sources.size()];
                s.bus = placed[k];
                sc.sources.push_back(s);
            }
        }

        if (spec.n_critical_loads > 0) {
            std::set<int> hosts;
            for (const Source& s : sc.sources) hosts.insert(s.bus);
            std::vector<int> pool;
            for (int id : load_buses)
                if (!hosts.count(id)) pool.push_back(id);
            if (spec.n_critical_loads > static_cast<int>(pool.size()))
                throw std::invalid_argument(
                    "generate_scenarios: scenario " + std::to_string(i) +
                    " has fewer eligible load buses than n_critical_loads");
            std::vector<int> crit =
                sample_without_replacement(pool, spec.n_critical_loads, rng);
            std::set<int> critset(crit.begin(), crit.end());
            for (Bus& b : sc.buses)
                if (b.is_load)
                    b.weight = critset.count(b.id) ? spec.critical_weight
                                                   : spec.normal_weight;
        }
        out.push_back(std::move(sc));
    }
    return out;
}

namespace {

std::vector<int> cut_lines_of(const Topology& full, const Topology& tree) {
    std::vector<int> out;
    for (int id : full.line_ids())
        if (!tree.has_line(id)) out.push_back(id);
    return out;
}

struct MethodOutcome {
    BenchRow row;
    bool scored_ok = false; // row.f is a valid objective
};

MethodOutcome run_method(const NetworkCase& sc, int scenario, Method m,
                         const BenchOptions& opt) {
    MethodOutcome mo;
    mo.row.scenario = scenario;
    mo.row.method = m;
    auto t0 = std::chrono::steady_clock::now();
    try {
        Topology full = full_topology(sc);
        Topology tree = full;
        std::vector<int> cuts;
        switch (m) {
            case Method::ih: {
                IhResult r = iterative_heuristic(sc, opt.tol);
                tree = std::move(r.topology);
                cuts = std::move(r.cuts.cut_lines);
                break;
            }
            case Method::mst: {
                tree = mst_baseline(sc, opt.tol);
                cuts = cut_lines_of(full, tree);
                break;
            }
            case Method::oracle: {
                OracleResult r = brute_force_oracle(sc, opt.tol, opt.tree_limit);
                tree = std::move(r.best_topology);
                cuts = cut_lines_of(full, tree);
                break;
            }
        }
        DispatchSolution d = evaluate(sc, tree, opt.tol);
        if (d.status != QpStatus::optimal)
            throw HeuristicError("final radial solve returned " +
                                     std::string(to_string(d.status)),
                                 IhTrace{}, d.status);
        mo.row.f = d.objective;
        mo.row.n_load = d.n_load_weighted;
        mo.row.p_loss = d.p_loss;
        mo.row.cut_lines = std::move(cuts);
        mo.row.status = "ok";
        mo.scored_ok = true;
    } catch (const OracleLimitError& e) {
        mo.row.status = "unscored";
        if (e.partial) mo.row.f = e.partial->best_objective;
    } catch (const std::exception& e) {
        mo.row.status = std::string("failed:") + e.what();
    }
    auto t1 = std::chrono::steady_clock::now();
    mo.row.time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return mo;
}

} // namespace

BenchReport run_benchmark(const NetworkCase& base, const ScenarioSpec& spec,
                          const std::vector<Method>& methods,
                          const BenchOptions& options) {
    if (methods.empty())
        throw std::invalid_argument("run_benchmark: no methods requested");
    std::vector<NetworkCase> scenarios = generate_scenarios(base, spec);

    BenchReport report;
    report.case_name = base.meta.name;
    report.seed = spec.seed;
    report.n_scenarios = spec.n_scenarios;
    report.near_optimum_threshold = base.periods.n_periods > 1 ? 1e-3 : 1e-4;
    report.methods = methods;

    const bool with_oracle =
        std::find(methods.begin(), methods.end(), Method::oracle) != methods.end();

    // Scenario-major result grid, filled by index so any worker schedule
    // produces the same report.
    std::vector<std::vector<MethodOutcome>> grid(scenarios.size());
    auto work_one = [&](int i) {
        std::vector<MethodOutcome> outcomes;
        outcomes.reserve(methods.size());
        for (Method m : methods)
            outcomes.push_back(run_method(scenarios[i], i, m, options));

        if (with_oracle) {
            const MethodOutcome* oracle = nullptr;
            for (const MethodOutcome& mo : outcomes)
                if (mo.row.method == Method::oracle) oracle = &mo;
            bool scored = oracle && oracle->scored_ok && oracle->row.f != 0.0;
            for (MethodOutcome& mo : outcomes)
                if (scored && mo.scored_ok)
                    mo.row.sigma = sigma(oracle->row.f, mo.row.f);
                else if (mo.scored_ok)
                    mo.row.status = "unscored";
        }
        grid[i] = std::move(outcomes);
    };

    int jobs = std::max(1, options.jobs);
    if (jobs == 1 || scenarios.empty()) {
        for (std::size_t i = 0; i < scenarios.size(); ++i)
            work_one(static_cast<int>(i));
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= scenarios.size()) return;
                work_one(static_cast<int>(i));
            }
        };
        std::vector<std::thread> threads;
        for (int w = 0; w < jobs; ++w) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    for (auto& outcomes : grid)
        for (MethodOutcome& mo : outcomes) {
            if (options.redact_timing) mo.row.time_ms = 0.0;
            report.rows.push_back(std::move(mo.row));
        }
    report.aggregates = compute_aggregates(report);
    return report;
}

std::map<Method, MethodAggregate> compute_aggregates(const BenchReport& report) {
    std::map<int, const BenchRow*> oracle_rows;
    for (const BenchRow& r : report.rows)
        if (r.method == Method::oracle && r.status == "ok")
            oracle_rows[r.scenario] = &r;

    auto as_set = [](const std::vector<int>& v) {
        std::set<int> s(v.begin(), v.end());
        return s;
    };

    std::map<Method, MethodAggregate> agg;
    for (Method m : report.methods) agg.emplace(m, MethodAggregate{});
    std::map<Method, double> t_sum, sigma_sum;
    for (const BenchRow& r : report.rows) {
        MethodAggregate& a = agg[r.method];
        if (r.status.rfind("failed:", 0) == 0) {
            ++a.n_failed;
            continue;
        }
        ++a.n_ok;
        if (a.n_ok == 1) {
            a.t_min_ms = a.t_max_ms = r.time_ms;
        } else {
            a.t_min_ms = std::min(a.t_min_ms, r.time_ms);
            a.t_max_ms = std::max(a.t_max_ms, r.time_ms);
        }
        t_sum[r.method] += r.time_ms;
        if (!r.sigma) {
            ++a.n_unscored;
            continue;
        }
        sigma_sum[r.method] += *r.sigma;
        a.sigma_max = std::max(a.sigma_max, *r.sigma);
        if (*r.sigma <= report.near_optimum_threshold) ++a.near_optimum;
        auto it = oracle_rows.find(r.scenario);
        if (it != oracle_rows.end()) {
            if (as_set(r.cut_lines) == as_set(it->second->cut_lines))
                ++a.same_topology;
            if (r.n_load < it->second->n_load - 1e-9) ++a.n_load_below;
        }
    }
    for (auto& [m, a] : agg) {
        if (a.n_ok > 0) a.t_ave_ms = t_sum[m] / a.n_ok;
        int scored = a.n_ok - a.n_unscored;
        if (scored > 0) a.sigma_ave = sigma_sum[m] / scored;
    }
    return agg;
}

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

} // namespace

std::string report_csv(const BenchReport& report) {
    std::string out = "scenario,method,f,sigma,n_load,p_loss,cut_lines,time_ms,status\n";
    for (const BenchRow& r : report.rows) {
        out += std::to_string(r.scenario);
        out += ',';
        out += to_string(r.method);
        out += ',';
        out += fmt("%.12g", r.f);
        out += ',';
        if (r.sigma) out += fmt("%.9g", *r.sigma);
        out += ',';
        out += fmt("%.12g", r.n_load);
        out += ',';
        out += fmt("%.12g", r.p_loss);
        out += ',';
        for (std::size_t i = 0; i < r.cut_lines.size(); ++i) {
            if (i) out += ';';
            out += std::to_string(r.cut_lines[i]);
        }
        out += ',';
        out += fmt("%.3f", r.time_ms);
        out += ',';
        out += r.status;
        out += '\n';
    }
    return out;
}

std::string report_summary_json(const BenchReport& report, int indent) {
    nlohmann::json j;
    j["case"] = report.case_name;
    j["seed"] = report.seed;
    j["n_scenarios"] = report.n_scenarios;
    j["near_optimum_threshold"] = report.near_optimum_threshold;
    nlohmann::json methods;
    for (const auto& [m, a] : report.aggregates) {
        methods[to_string(m)] = {
            {"ok", a.n_ok},
            {"failed", a.n_failed},
            {"unscored", a.n_unscored},
            {"same_topology", a.same_topology},
            {"near_optimum", a.near_optimum},
            {"n_load_below_reference", a.n_load_below},
            {"sigma_ave", a.sigma_ave},
            {"sigma_max", a.sigma_max},
            {"t_min_ms", a.t_min_ms},
            {"t_max_ms", a.t_max_ms},
            {"t_ave_ms", a.t_ave_ms},
        };
    }
    j["methods"] = std::move(methods);
    return j.dump(indent);
}

} // namespace restopo
