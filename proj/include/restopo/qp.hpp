#pragma once

#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace restopo {

// Convex quadratic program
//   minimize    0.5 x'Qx + c'x
//   subject to  A x  = b
//               G x <= h
//               lb <= x <= ub   (entries may be +-infinity)
// with Q symmetric positive semidefinite.
struct QuadraticProgram {
    int n_vars = 0;
    Eigen::SparseMatrix<double> quad;  // n x n
    Eigen::VectorXd linear;            // n
    Eigen::SparseMatrix<double> eq;    // m_eq x n
    Eigen::VectorXd eq_rhs;
    Eigen::SparseMatrix<double> ineq;  // m_ineq x n, sense <=
    Eigen::VectorXd ineq_rhs;
    Eigen::VectorXd lower;             // n
    Eigen::VectorXd upper;             // n
};

enum class QpStatus { optimal, infeasible, limit };

const char* to_string(QpStatus s);

struct QpResiduals {
    double primal_inf = 0.0; // max violation of equalities/inequalities/bounds
    double dual_inf = 0.0;   // stationarity residual, infinity norm
    double gap = 0.0;        // |primal - dual objective| / (1 + |primal| + |dual|)
};

struct QpSolution {
    QpStatus status = QpStatus::limit;
    Eigen::VectorXd primal;
    Eigen::VectorXd dual_eq;    // free sign
    Eigen::VectorXd dual_ineq;  // >= 0
    Eigen::VectorXd dual_lower; // >= 0, multiplier of x >= lb
    Eigen::VectorXd dual_upper; // >= 0, multiplier of x <= ub
    double objective = 0.0;     // 0.5 x'Qx + c'x at primal
    QpResiduals residuals;
    int iterations = 0;
};

struct QpSolveOptions {
    double tol = 1e-8;
    int max_iter = 10000;
};

// Deterministic primal-dual interior-point solve. With status optimal the
// reported residuals are all <= tol. Infeasible problems are detected via a
// Farkas certificate on the diverging duals; otherwise the iteration cap
// yields status limit with the best iterate attached.
QpSolution solve_qp(const QuadraticProgram& qp, const QpSolveOptions& options);
QpSolution solve_qp(const QuadraticProgram& qp, double tol = 1e-8);

// Incremental assembly helper. add_quad(i, w) adds w * x_i^2 to the
// objective (so quad(i,i) gains 2w under the 0.5 x'Qx convention).
class QpBuilder {
  public:
    explicit QpBuilder(int n_vars);

    void add_quad(int i, double coeff);
    void add_cross(int i, int j, double coeff); // coeff * x_i * x_j
    void add_linear(int i, double coeff);
    void set_lower(int i, double v);
    void set_upper(int i, double v);
    void set_bounds(int i, double lo, double hi);
    void add_eq(const std::vector<std::pair<int, double>>& row, double rhs);
    void add_ineq(const std::vector<std::pair<int, double>>& row, double rhs);

    int n_vars() const { return n_; }
    int n_eq() const { return static_cast<int>(eq_rhs_.size()); }
    int n_ineq() const { return static_cast<int>(ineq_rhs_.size()); }

    QuadraticProgram build() const;

  private:
    int n_;
    std::vector<Eigen::Triplet<double>> quad_, eq_, ineq_;
    std::vector<double> linear_, lower_, upper_;
    std::vector<double> eq_rhs_, ineq_rhs_;
};

inline constexpr double qp_inf = std::numeric_limits<double>::infinity();

} // namespace restopo
