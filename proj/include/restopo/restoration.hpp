#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "restopo/case.hpp"
#include "restopo/qp.hpp"
#include "restopo/topology.hpp"

namespace restopo {

// Variable indexing shared by the single- and multi-period builders.
// Variables are laid out period-major; within one period the order is
// line flows P, line flows Q, unit active power, unit reactive power,
// load fractions gamma. Units list sources first, then storages.
struct ModelLayout {
    int n_periods = 1;
    std::vector<int> line_ids;    // column order of the flow blocks
    std::vector<int> unit_buses;  // bus id per unit
    std::vector<bool> unit_is_storage;
    std::vector<int> load_buses;  // bus ids carrying demand (set L)
    std::vector<double> load_weights;

    int n_lines() const { return static_cast<int>(line_ids.size()); }
    int n_units() const { return static_cast<int>(unit_buses.size()); }
    int n_loads() const { return static_cast<int>(load_buses.size()); }
    int period_stride() const { return 2 * n_lines() + 2 * n_units() + n_loads(); }
    int n_vars() const { return n_periods * period_stride(); }

    int p_flow(int t, int line_pos) const { return t * period_stride() + line_pos; }
    int q_flow(int t, int line_pos) const {
        return t * period_stride() + n_lines() + line_pos;
    }
    int p_unit(int t, int unit_pos) const {
        return t * period_stride() + 2 * n_lines() + unit_pos;
    }
    int q_unit(int t, int unit_pos) const {
        return t * period_stride() + 2 * n_lines() + n_units() + unit_pos;
    }
    int gamma(int t, int load_pos) const {
        return t * period_stride() + 2 * n_lines() + 2 * n_units() + load_pos;
    }
};

// Dispatch for one topology: flows, generation, and load fractions per
// period, plus the objective split into its served-load and loss parts.
// objective carries the maximization sign (served load minus weighted loss).
struct DispatchSolution {
    QpStatus status = QpStatus::limit;
    double objective = 0.0;
    double n_load_weighted = 0.0; // sum over periods of w_i * gamma_i
    double p_loss = 0.0;          // sum over periods of R * (P^2 + Q^2) / V^2
    QpResiduals residuals{};
    int qp_iterations = 0;
    double solve_ms = 0.0;

    ModelLayout layout;
    std::vector<Eigen::VectorXd> flow_p; // [period][line_pos], signed from->to
    std::vector<Eigen::VectorXd> flow_q;
    std::vector<Eigen::VectorXd> p_gen;  // [period][unit_pos]
    std::vector<Eigen::VectorXd> q_gen;
    std::vector<Eigen::VectorXd> gamma;  // [period][load_pos]

    // Total |P| of one line across periods (the cut criterion's measure).
    double flow_magnitude(int line_id) const;
};

struct ModelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Topology with every case line closed; bus index i maps to c.buses[i].
Topology full_topology(const NetworkCase& c);

ModelLayout make_layout(const NetworkCase& c, const Topology& t, int n_periods);

// Single-snapshot restoration model over topology t: maximize served
// weighted load minus w0-weighted resistive losses, subject to per-bus
// active/reactive balance, source capacity, and line thermal limits.
// The returned program is the minimizing negation.
QuadraticProgram build_clr_mesh(const NetworkCase& c, const Topology& t);

// Multi-period extension: per-period copies of the snapshot model plus
// cumulative energy-budget rows for budgeted sources and state-of-charge
// corridor rows for storages, both enforced at every period prefix.
QuadraticProgram build_mpclr_mesh(const NetworkCase& c, const Topology& t);

// Build (single vs multi-period per c.periods), solve, unpack.
DispatchSolution evaluate(const NetworkCase& c, const Topology& t, double tol = 1e-8);

// Result-document rendering of a dispatch (JSON text, keys mirror fields).
std::string dispatch_to_json(const DispatchSolution& d, int indent = 2);

} // namespace restopo
