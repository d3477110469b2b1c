#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace restopo {

// All quantities are per-unit on one common base. base_mva is carried for
// report labeling only; nothing downstream converts units.

struct Bus {
    int id = 0;
    std::vector<double> p_load; // per period; length 1 broadcasts
    std::vector<double> q_load;
    double weight = 0.0;
    bool is_load = false; // any nonzero demand entry
};

struct Line {
    int id = 0;
    int from_bus = 0;
    int to_bus = 0;
    double resistance = 0.0; // p.u., > 0
    double p_max = 0.0;      // thermal limit on |P|, p.u.
    bool switchable = true;
};

struct Source {
    int bus = 0;
    double p_max = 0.0;
    double q_max = 0.0;
    std::optional<double> energy_budget; // p.u.*h over the horizon
};

struct Storage {
    int bus = 0;
    double soc_init = 0.0;
    double soc_min = 0.0;
    double soc_max = 1.0;
    double rho = 0.0; // SOC per unit energy; negative: discharging drains SOC
    double p_max = 0.0;
    double p_min = 0.0; // negative allows charging
    double q_max = 0.0;
};

struct PeriodSpec {
    int n_periods = 1;
    double interval_hours = 1.0;
};

struct CaseMeta {
    std::string name;
    double base_mva = 0.0;
};

struct NetworkCase {
    CaseMeta meta;
    double w0 = 0.001;   // loss weight in the objective
    double v_rate = 1.0; // flat voltage magnitude, p.u.
    PeriodSpec periods;
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Source> sources;
    std::vector<Storage> storages;

    // Dense index of a bus id into buses, or -1.
    int bus_index(int bus_id) const;
    const Line* line_by_id(int line_id) const;
    // Demand at period t, honoring length-1 broadcast.
    double p_load_at(int bus_pos, int t) const;
    double q_load_at(int bus_pos, int t) const;
};

struct CaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse failure; message names the offending field.
struct ParseError : CaseError {
    using CaseError::CaseError;
};

// A line/source/storage pointing at a bus id that does not exist.
struct RefError : CaseError {
    using CaseError::CaseError;
};

// Recompute Bus::is_load from the demand arrays.
void mark_load_buses(NetworkCase& c);

NetworkCase parse_case(const std::string& text);
NetworkCase load_case(const std::string& path);
std::string serialize_case(const NetworkCase& c);
void save_case(const NetworkCase& c, const std::string& path);

struct Violation {
    std::string entity; // e.g. "line 7"
    std::string rule;   // e.g. "resistance must be > 0"
};

// Empty iff every type invariant holds and the all-lines-closed graph is
// connected. Violations are reported, never thrown.
std::vector<Violation> validate(const NetworkCase& c);

} // namespace restopo
