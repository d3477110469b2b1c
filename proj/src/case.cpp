#include "restopo/case.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace restopo {

using nlohmann::json;

int NetworkCase::bus_index(int bus_id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == bus_id) return static_cast<int>(i);
    return -1;
}

const Line* NetworkCase::line_by_id(int line_id) const {
    for (const Line& l : lines)
        if (l.id == line_id) return &l;
    return nullptr;
}

double NetworkCase::p_load_at(int bus_pos, int t) const {
    const auto& arr = buses[bus_pos].p_load;
    if (arr.empty()) return 0.0;
    return arr.size() == 1 ? arr[0] : arr[static_cast<std::size_t>(t)];
}

double NetworkCase::q_load_at(int bus_pos, int t) const {
    const auto& arr = buses[bus_pos].q_load;
    if (arr.empty()) return 0.0;
    return arr.size() == 1 ? arr[0] : arr[static_cast<std::size_t>(t)];
}

void mark_load_buses(NetworkCase& c) {
    for (Bus& b : c.buses) {
        auto nonzero = [](const std::vector<double>& v) {
            return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
        };
        b.is_load = nonzero(b.p_load) || nonzero(b.q_load);
    }
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ParseError("case file: field '" + field + "': " + what);
}

double num_at(const json& obj, const std::string& field, const std::string& path) {
    auto it = obj.find(field);
    if (it == obj.end()) fail(path + "." + field, "missing");
    if (!it->is_number()) fail(path + "." + field, "expected a number");
    return it->get<double>();
}

int int_at(const json& obj, const std::string& field, const std::string& path) {
    auto it = obj.find(field);
    if (it == obj.end()) fail(path + "." + field, "missing");
    if (!it->is_number_integer()) fail(path + "." + field, "expected an integer");
    return it->get<int>();
}

// Demand entries may be a scalar or an array of numbers.
std::vector<double> demand_at(const json& obj, const std::string& field,
                              const std::string& path) {
    auto it = obj.find(field);
    if (it == obj.end()) fail(path + "." + field, "missing");
    std::vector<double> out;
    if (it->is_number()) {
        out.push_back(it->get<double>());
    } else if (it->is_array()) {
        for (const auto& v : *it) {
            if (!v.is_number()) fail(path + "." + field, "expected numbers");
            out.push_back(v.get<double>());
        }
        if (out.empty()) fail(path + "." + field, "empty array");
    } else {
        fail(path + "." + field, "expected a number or an array");
    }
    return out;
}

json demand_json(const std::vector<double>& v) {
    if (v.size() == 1) return json(v[0]);
    return json(v);
}

} // namespace

NetworkCase parse_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("case file: not a well-formed document: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("case file: top level must be an object");

    NetworkCase c;
    if (doc.contains("meta")) {
        const json& m = doc["meta"];
        if (!m.is_object()) fail("meta", "expected an object");
        if (m.contains("name")) {
            if (!m["name"].is_string()) fail("meta.name", "expected a string");
            c.meta.name = m["name"].get<std::string>();
        }
        if (m.contains("base_mva")) c.meta.base_mva = num_at(m, "base_mva", "meta");
    }
    if (doc.contains("w0")) {
        if (!doc["w0"].is_number()) fail("w0", "expected a number");
        c.w0 = doc["w0"].get<double>();
    }
    if (doc.contains("periods")) {
        const json& p = doc["periods"];
        if (!p.is_object()) fail("periods", "expected an object");
        c.periods.n_periods = int_at(p, "n", "periods");
        c.periods.interval_hours = num_at(p, "interval_hours", "periods");
    }

    auto it_buses = doc.find("buses");
    if (it_buses == doc.end() || !it_buses->is_array()) fail("buses", "missing or not an array");
    int i = 0;
    for (const json& jb : *it_buses) {
        std::string path = "buses[" + std::to_string(i++) + "]";
        if (!jb.is_object()) fail(path, "expected an object");
        Bus b;
        b.id = int_at(jb, "id", path);
        b.p_load = demand_at(jb, "p_load", path);
        b.q_load = demand_at(jb, "q_load", path);
        b.weight = num_at(jb, "weight", path);
        c.buses.push_back(std::move(b));
    }

    auto it_lines = doc.find("lines");
    if (it_lines == doc.end() || !it_lines->is_array()) fail("lines", "missing or not an array");
    i = 0;
    for (const json& jl : *it_lines) {
        std::string path = "lines[" + std::to_string(i++) + "]";
        if (!jl.is_object()) fail(path, "expected an object");
        Line l;
        l.id = int_at(jl, "id", path);
        l.from_bus = int_at(jl, "from", path);
        l.to_bus = int_at(jl, "to", path);
        l.resistance = num_at(jl, "r", path);
        l.p_max = num_at(jl, "p_max", path);
        c.lines.push_back(l);
    }

    if (doc.contains("sources")) {
        if (!doc["sources"].is_array()) fail("sources", "expected an array");
        i = 0;
        for (const json& js : doc["sources"]) {
            std::string path = "sources[" + std::to_string(i++) + "]";
            if (!js.is_object()) fail(path, "expected an object");
            Source s;
            s.bus = int_at(js, "bus", path);
            s.p_max = num_at(js, "p_max", path);
            s.q_max = num_at(js, "q_max", path);
            if (js.contains("energy_budget"))
                s.energy_budget = num_at(js, "energy_budget", path);
            c.sources.push_back(s);
        }
    }

    if (doc.contains("storages")) {
        if (!doc["storages"].is_array()) fail("storages", "expected an array");
        i = 0;
        for (const json& js : doc["storages"]) {
            std::string path = "storages[" + std::to_string(i++) + "]";
            if (!js.is_object()) fail(path, "expected an object");
            Storage s;
            s.bus = int_at(js, "bus", path);
            s.soc_init = num_at(js, "soc_init", path);
            s.soc_min = num_at(js, "soc_min", path);
            s.soc_max = num_at(js, "soc_max", path);
            s.rho = num_at(js, "rho", path);
            s.p_max = num_at(js, "p_max", path);
            s.q_max = num_at(js, "q_max", path);
            if (js.contains("p_min")) s.p_min = num_at(js, "p_min", path);
            c.storages.push_back(s);
        }
    }

    // Dangling references are rejected here; range checks live in validate().
    for (const Line& l : c.lines) {
        if (c.bus_index(l.from_bus) < 0)
            throw RefError("line " + std::to_string(l.id) + " references unknown bus " +
                           std::to_string(l.from_bus));
        if (c.bus_index(l.to_bus) < 0)
            throw RefError("line " + std::to_string(l.id) + " references unknown bus " +
                           std::to_string(l.to_bus));
    }
    for (const Source& s : c.sources)
        if (c.bus_index(s.bus) < 0)
            throw RefError("source references unknown bus " + std::to_string(s.bus));
    for (const Storage& s : c.storages)
        if (c.bus_index(s.bus) < 0)
            throw RefError("storage references unknown bus " + std::to_string(s.bus));

    mark_load_buses(c);
    return c;
}

NetworkCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string serialize_case(const NetworkCase& c) {
    json doc;
    doc["meta"] = {{"name", c.meta.name}, {"base_mva", c.meta.base_mva}};
    doc["w0"] = c.w0;
    doc["periods"] = {{"n", c.periods.n_periods}, {"interval_hours", c.periods.interval_hours}};
    doc["buses"] = json::array();
    for (const Bus& b : c.buses)
        doc["buses"].push_back({{"id", b.id},
                                {"p_load", demand_json(b.p_load)},
                                {"q_load", demand_json(b.q_load)},
                                {"weight", b.weight}});
    doc["lines"] = json::array();
    for (const Line& l : c.lines)
        doc["lines"].push_back({{"id", l.id},
                                {"from", l.from_bus},
                                {"to", l.to_bus},
                                {"r", l.resistance},
                                {"p_max", l.p_max}});
    doc["sources"] = json::array();
    for (const Source& s : c.sources) {
        json js = {{"bus", s.bus}, {"p_max", s.p_max}, {"q_max", s.q_max}};
        if (s.energy_budget) js["energy_budget"] = *s.energy_budget;
        doc["sources"].push_back(std::move(js));
    }
    doc["storages"] = json::array();
    for (const Storage& s : c.storages) {
        json js = {{"bus", s.bus},       {"soc_init", s.soc_init}, {"soc_min", s.soc_min},
                   {"soc_max", s.soc_max}, {"rho", s.rho},         {"p_max", s.p_max},
                   {"q_max", s.q_max}};
        if (s.p_min != 0.0) js["p_min"] = s.p_min;
        doc["storages"].push_back(std::move(js));
    }
    return doc.dump(2) + "\n";
}

void save_case(const NetworkCase& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CaseError("cannot write case file: " + path);
    out << serialize_case(c);
}

namespace {

bool connected_with_all_lines(const NetworkCase& c) {
    const int n = static_cast<int>(c.buses.size());
    if (n <= 1) return true;
    std::vector<std::vector<int>> adj(n);
    for (const Line& l : c.lines) {
        int a = c.bus_index(l.from_bus), b = c.bus_index(l.to_bus);
        if (a < 0 || b < 0) continue; // reported separately
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                ++reached;
                stack.push_back(v);
            }
    }
    return reached == n;
}

} // namespace

std::vector<Violation> validate(const NetworkCase& c) {
    std::vector<Violation> out;
    auto add = [&](const std::string& entity, const std::string& rule) {
        out.push_back({entity, rule});
    };

    const int T = c.periods.n_periods;
    if (T < 1) add("periods", "n_periods must be >= 1");
    if (!(c.periods.interval_hours > 0)) add("periods", "interval_hours must be > 0");
    if (c.w0 < 0) add("case", "w0 must be >= 0");

    std::set<int> bus_ids;
    for (const Bus& b : c.buses) {
        std::string who = "bus " + std::to_string(b.id);
        if (b.id < 0) add(who, "id must be >= 0");
        if (!bus_ids.insert(b.id).second) add(who, "duplicate bus id");
        if (b.weight < 0) add(who, "weight must be >= 0");
        auto len_ok = [&](std::size_t n) { return n == 1 || static_cast<int>(n) == T; };
        if (b.p_load.empty() || !len_ok(b.p_load.size()))
            add(who, "p_load must have length 1 or n_periods");
        if (b.q_load.empty() || !len_ok(b.q_load.size()))
            add(who, "q_load must have length 1 or n_periods");
        for (double v : b.p_load)
            if (v < 0) {
                add(who, "p_load must be >= 0");
                break;
            }
    }

    std::set<int> line_ids;
    std::set<std::tuple<int, int, int>> line_triples;
    for (const Line& l : c.lines) {
        std::string who = "line " + std::to_string(l.id);
        if (!line_ids.insert(l.id).second) add(who, "duplicate line id");
        if (!line_triples.insert({l.from_bus, l.to_bus, l.id}).second)
            add(who, "duplicate (from,to,id) triple");
        if (!(l.resistance > 0)) add(who, "resistance must be > 0");
        if (!(l.p_max > 0)) add(who, "p_max must be > 0");
        if (l.from_bus == l.to_bus) add(who, "from and to must differ");
        if (c.bus_index(l.from_bus) < 0)
            add(who, "from references unknown bus " + std::to_string(l.from_bus));
        if (c.bus_index(l.to_bus) < 0)
            add(who, "to references unknown bus " + std::to_string(l.to_bus));
    }

    for (const Source& s : c.sources) {
        std::string who = "source at bus " + std::to_string(s.bus);
        if (s.p_max < 0) add(who, "p_max must be >= 0");
        if (s.q_max < 0) add(who, "q_max must be >= 0");
        if (s.energy_budget && *s.energy_budget < 0) add(who, "energy_budget must be >= 0");
        if (c.bus_index(s.bus) < 0) add(who, "references unknown bus");
    }

    for (const Storage& s : c.storages) {
        std::string who = "storage at bus " + std::to_string(s.bus);
        if (!(s.soc_min <= s.soc_init && s.soc_init <= s.soc_max))
            add(who, "soc_init must lie in [soc_min, soc_max]");
        if (s.rho == 0.0) add(who, "rho must be nonzero");
        if (s.p_max < 0) add(who, "p_max must be >= 0");
        if (s.p_min > 0) add(who, "p_min must be <= 0");
        if (s.q_max < 0) add(who, "q_max must be >= 0");
        if (c.bus_index(s.bus) < 0) add(who, "references unknown bus");
    }

    if (c.sources.empty() && c.storages.empty()) add("case", "at least one source is required");
    if (!connected_with_all_lines(c))
        add("case", "graph with all lines closed must be connected");

    return out;
}

} // namespace restopo
