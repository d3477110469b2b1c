#include "restopo/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/SparseCholesky>

namespace restopo {

const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::optimal: return "optimal";
        case QpStatus::infeasible: return "infeasible";
        case QpStatus::limit: return "limit";
    }
    return "unknown";
}

QpBuilder::QpBuilder(int n_vars)
    : n_(n_vars), linear_(n_vars, 0.0), lower_(n_vars, -qp_inf), upper_(n_vars, qp_inf) {
    if (n_vars <= 0) throw std::invalid_argument("QpBuilder: n_vars must be > 0");
}

namespace {
inline void check_var(int i, int n) {
    if (i < 0 || i >= n)
        throw std::out_of_range("QpBuilder: variable index " + std::to_string(i) +
                                " outside [0, " + std::to_string(n) + ")");
}
} // namespace

void QpBuilder::add_quad(int i, double coeff) {
    check_var(i, n_);
    quad_.emplace_back(i, i, 2.0 * coeff);
}

void QpBuilder::add_cross(int i, int j, double coeff) {
    check_var(i, n_);
    check_var(j, n_);
    quad_.emplace_back(i, j, coeff);
    quad_.emplace_back(j, i, coeff);
}

void QpBuilder::add_linear(int i, double coeff) {
    check_var(i, n_);
    linear_[i] += coeff;
}

void QpBuilder::set_lower(int i, double v) {
    check_var(i, n_);
    lower_[i] = v;
}
void QpBuilder::set_upper(int i, double v) {
    check_var(i, n_);
    upper_[i] = v;
}
void QpBuilder::set_bounds(int i, double lo, double hi) {
    check_var(i, n_);
    lower_[i] = lo;
    upper_[i] = hi;
}

void QpBuilder::add_eq(const std::vector<std::pair<int, double>>& row, double rhs) {
    int r = static_cast<int>(eq_rhs_.size());
    for (const auto& [col, v] : row) {
        check_var(col, n_);
        eq_.emplace_back(r, col, v);
    }
    eq_rhs_.push_back(rhs);
}

void QpBuilder::add_ineq(const std::vector<std::pair<int, double>>& row, double rhs) {
    int r = static_cast<int>(ineq_rhs_.size());
    for (const auto& [col, v] : row) {
        check_var(col, n_);
        ineq_.emplace_back(r, col, v);
    }
    ineq_rhs_.push_back(rhs);
}

QuadraticProgram QpBuilder::build() const {
    QuadraticProgram qp;
    qp.n_vars = n_;
    qp.quad.resize(n_, n_);
    qp.quad.setFromTriplets(quad_.begin(), quad_.end());
    qp.linear = Eigen::Map<const Eigen::VectorXd>(linear_.data(), n_);
    qp.eq.resize(n_eq(), n_);
    qp.eq.setFromTriplets(eq_.begin(), eq_.end());
    qp.eq_rhs = Eigen::Map<const Eigen::VectorXd>(eq_rhs_.data(), n_eq());
    qp.ineq.resize(n_ineq(), n_);
    qp.ineq.setFromTriplets(ineq_.begin(), ineq_.end());
    qp.ineq_rhs = Eigen::Map<const Eigen::VectorXd>(ineq_rhs_.data(), n_ineq());
    qp.lower = Eigen::Map<const Eigen::VectorXd>(lower_.data(), n_);
    qp.upper = Eigen::Map<const Eigen::VectorXd>(upper_.data(), n_);
    return qp;
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Trip = Eigen::Triplet<double>;

constexpr double kReg = 1e-9; // static KKT regularization, undone by refinement

// Canonical form with bounds folded into the inequality block. Row origin is
// remembered so bound multipliers can be unfolded afterwards.
struct Folded {
    SpMat G;       // m x n
    Vec h;         // m
    int m_ineq;    // leading rows come from qp.ineq
    std::vector<int> lower_rows; // (row, var) pairs via parallel arrays
    std::vector<int> lower_vars;
    std::vector<int> upper_rows;
    std::vector<int> upper_vars;
};

Folded fold_bounds(const QuadraticProgram& qp) {
    Folded f;
    f.m_ineq = static_cast<int>(qp.ineq.rows());
    std::vector<Trip> trips;
    std::vector<double> rhs;
    for (int k = 0; k < qp.ineq.outerSize(); ++k)
        for (SpMat::InnerIterator it(qp.ineq, k); it; ++it)
            trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                               it.value());
    for (int i = 0; i < f.m_ineq; ++i) rhs.push_back(qp.ineq_rhs[i]);
    for (int i = 0; i < qp.n_vars; ++i) {
        if (std::isfinite(qp.lower[i])) {
            int r = static_cast<int>(rhs.size());
            trips.emplace_back(r, i, -1.0);
            rhs.push_back(-qp.lower[i]);
            f.lower_rows.push_back(r);
            f.lower_vars.push_back(i);
        }
    }
    for (int i = 0; i < qp.n_vars; ++i) {
        if (std::isfinite(qp.upper[i])) {
            int r = static_cast<int>(rhs.size());
            trips.emplace_back(r, i, 1.0);
            rhs.push_back(qp.upper[i]);
            f.upper_rows.push_back(r);
            f.upper_vars.push_back(i);
        }
    }
    f.G.resize(static_cast<int>(rhs.size()), qp.n_vars);
    f.G.setFromTriplets(trips.begin(), trips.end());
    f.h = Eigen::Map<const Vec>(rhs.data(), static_cast<int>(rhs.size()));
    return f;
}

struct KktSolver {
    const SpMat& Q;
    const SpMat& A;
    const SpMat& G;
    int n, p, m;
    SpMat K;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    bool analyzed = false;

    KktSolver(const SpMat& Q_, const SpMat& A_, const SpMat& G_)
        : Q(Q_), A(A_), G(G_), n(static_cast<int>(Q_.rows())),
          p(static_cast<int>(A_.rows())), m(static_cast<int>(G_.rows())) {}

    // K = [Q+dI  A'    G'      ]
    //     [A    -dI    0       ]
    //     [G     0   -(W + dI) ]
    bool factor(const Vec& w) {
        std::vector<Trip> trips;
        trips.reserve(Q.nonZeros() + 2 * A.nonZeros() + 2 * G.nonZeros() + n + p + m);
        for (int k = 0; k < Q.outerSize(); ++k)
            for (SpMat::InnerIterator it(Q, k); it; ++it)
                trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                   it.value());
        for (int i = 0; i < n; ++i) trips.emplace_back(i, i, kReg);
        for (int k = 0; k < A.outerSize(); ++k)
            for (SpMat::InnerIterator it(A, k); it; ++it) {
                int r = n + static_cast<int>(it.row());
                int c = static_cast<int>(it.col());
                trips.emplace_back(r, c, it.value());
                trips.emplace_back(c, r, it.value());
            }
        for (int i = 0; i < p; ++i) trips.emplace_back(n + i, n + i, -kReg);
        for (int k = 0; k < G.outerSize(); ++k)
            for (SpMat::InnerIterator it(G, k); it; ++it) {
                int r = n + p + static_cast<int>(it.row());
                int c = static_cast<int>(it.col());
                trips.emplace_back(r, c, it.value());
                trips.emplace_back(c, r, it.value());
            }
        for (int i = 0; i < m; ++i) trips.emplace_back(n + p + i, n + p + i, -(w[i] + kReg));
        K.resize(n + p + m, n + p + m);
        K.setFromTriplets(trips.begin(), trips.end());
        if (!analyzed) {
            ldlt.analyzePattern(K);
            analyzed = true;
        }
        ldlt.factorize(K);
        return ldlt.info() == Eigen::Success;
    }

    // Residual against the unregularized KKT operator.
    Vec apply_exact(const Vec& sol, const Vec& w) const {
        Vec dx = sol.head(n), dy = sol.segment(n, p), dz = sol.tail(m);
        Vec r(n + p + m);
        r.head(n) = Q * dx + A.transpose() * dy + G.transpose() * dz;
        r.segment(n, p) = A * dx;
        r.tail(m) = G * dx - w.cwiseProduct(dz);
        return r;
    }

    Vec solve(const Vec& rhs, const Vec& w) const {
        Vec sol = ldlt.solve(rhs);
        for (int round = 0; round < 2; ++round) {
            Vec resid = rhs - apply_exact(sol, w);
            sol += ldlt.solve(resid);
        }
        return sol;
    }
};

double max_step(const Vec& v, const Vec& dv) {
    double a = 1.0;
    for (int i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
}

struct Iterate {
    Vec x, y, z, s;
};

void check_shape(const QuadraticProgram& qp) {
    const int n = qp.n_vars;
    if (n <= 0) throw std::invalid_argument("solve_qp: empty program");
    if (qp.quad.rows() != n || qp.quad.cols() != n || qp.linear.size() != n ||
        qp.lower.size() != n || qp.upper.size() != n)
        throw std::invalid_argument("solve_qp: objective/bounds dimensions inconsistent");
    if (qp.eq.cols() != n || qp.eq.rows() != qp.eq_rhs.size())
        throw std::invalid_argument("solve_qp: equality block dimensions inconsistent");
    if (qp.ineq.cols() != n || qp.ineq.rows() != qp.ineq_rhs.size())
        throw std::invalid_argument("solve_qp: inequality block dimensions inconsistent");
    for (int i = 0; i < n; ++i)
        if (qp.lower[i] > qp.upper[i])
            throw std::invalid_argument("solve_qp: lower bound above upper bound");
}

} // namespace

QpSolution solve_qp(const QuadraticProgram& qp, const QpSolveOptions& options) {
    check_shape(qp);
    if (!(options.tol > 0)) throw std::invalid_argument("solve_qp: tol must be > 0");
    const double tol = options.tol;
    const int n = qp.n_vars;
    const int p = static_cast<int>(qp.eq.rows());

    Folded f = fold_bounds(qp);
    const int m = static_cast<int>(f.G.rows());
    const SpMat& A = qp.eq;
    const SpMat& G = f.G;
    const Vec& b = qp.eq_rhs;
    const Vec& h = f.h;

    KktSolver kkt(qp.quad, A, G);

    auto primal_obj = [&](const Vec& x) {
        return 0.5 * x.dot(qp.quad * x) + qp.linear.dot(x);
    };
    auto dual_obj = [&](const Vec& x, const Vec& y, const Vec& z) {
        double v = -0.5 * x.dot(qp.quad * x);
        if (p > 0) v -= b.dot(y);
        if (m > 0) v -= h.dot(z);
        return v;
    };

    auto finish = [&](QpStatus status, const Iterate& it, int iters) {
        QpSolution sol;
        sol.status = status;
        sol.primal = it.x;
        sol.dual_eq = it.y;
        sol.dual_ineq = (f.m_ineq > 0) ? Vec(it.z.head(f.m_ineq)) : Vec(0);
        sol.dual_lower = Vec::Zero(n);
        sol.dual_upper = Vec::Zero(n);
        for (std::size_t k = 0; k < f.lower_rows.size(); ++k)
            sol.dual_lower[f.lower_vars[k]] = it.z[f.lower_rows[k]];
        for (std::size_t k = 0; k < f.upper_rows.size(); ++k)
            sol.dual_upper[f.upper_vars[k]] = it.z[f.upper_rows[k]];
        sol.objective = primal_obj(it.x);
        double pinf = 0.0;
        if (p > 0) pinf = (A * it.x - b).cwiseAbs().maxCoeff();
        if (m > 0) pinf = std::max(pinf, (G * it.x - h).maxCoeff());
        pinf = std::max(pinf, 0.0);
        Vec rd = qp.quad * it.x + qp.linear;
        if (p > 0) rd += A.transpose() * it.y;
        if (m > 0) rd += G.transpose() * it.z;
        sol.residuals.primal_inf = pinf;
        sol.residuals.dual_inf = rd.cwiseAbs().maxCoeff();
        double po = sol.objective, dobj = dual_obj(it.x, it.y, it.z);
        sol.residuals.gap = std::abs(po - dobj) / (1.0 + std::abs(po) + std::abs(dobj));
        sol.iterations = iters;
        return sol;
    };

    Iterate it;
    it.x = Vec::Zero(n);
    it.y = Vec::Zero(p);
    it.z = Vec::Zero(m);
    it.s = Vec::Zero(m);

    // Equality-constrained (or unconstrained) programs need no barrier: one
    // regularized Newton solve plus refinement either meets the tolerance or
    // certifies inconsistent equalities.
    if (m == 0) {
        if (!kkt.factor(Vec(0)))
            return finish(QpStatus::limit, it, 0);
        Vec rhs(n + p);
        rhs.head(n) = -qp.linear;
        rhs.tail(p) = b;
        Vec sol = kkt.solve(rhs, Vec(0));
        it.x = sol.head(n);
        it.y = sol.tail(p);
        QpSolution out = finish(QpStatus::optimal, it, 1);
        if (out.residuals.primal_inf <= tol && out.residuals.dual_inf <= tol &&
            out.residuals.gap <= tol)
            return out;
        double ynorm = (p > 0) ? it.y.cwiseAbs().maxCoeff() : 0.0;
        if (ynorm > 1.0) {
            Vec yn = it.y / ynorm;
            double farkas = (A.transpose() * yn).cwiseAbs().maxCoeff();
            if (farkas <= 1e-7 && std::abs(b.dot(yn)) > 1e-7)
                return finish(QpStatus::infeasible, it, 1);
        }
        out.status = QpStatus::limit;
        return out;
    }

    // Starting point: one solve with unit complementarity weights, then the
    // usual shift into the positive orthant.
    {
        if (!kkt.factor(Vec::Ones(m)))
            return finish(QpStatus::limit, it, 0);
        Vec rhs(n + p + m);
        rhs.head(n) = -qp.linear;
        rhs.segment(n, p) = b;
        rhs.tail(m) = h;
        Vec sol = kkt.solve(rhs, Vec::Ones(m));
        it.x = sol.head(n);
        it.y = sol.segment(n, p);
        it.z = sol.tail(m);
        it.s = -it.z;
        double dp = std::max(0.0, -1.5 * it.s.minCoeff());
        double dd = std::max(0.0, -1.5 * it.z.minCoeff());
        it.s.array() += dp;
        it.z.array() += dd;
        double dot = it.s.dot(it.z);
        if (dot <= 0) {
            it.s.setOnes();
            it.z.setOnes();
        } else {
            it.s.array() += 0.5 * dot / it.z.sum();
            it.z.array() += 0.5 * dot / it.s.sum();
        }
    }

    QpSolution best;
    double best_score = std::numeric_limits<double>::infinity();
    auto consider_best = [&](int iters) {
        QpSolution cand = finish(QpStatus::limit, it, iters);
        double score = std::max({cand.residuals.primal_inf, cand.residuals.dual_inf,
                                 cand.residuals.gap});
        if (score < best_score) {
            best_score = score;
            best = cand;
        }
    };

    double pinf_prev = std::numeric_limits<double>::infinity();
    int stalled = 0;

    for (int iter = 0; iter < options.max_iter; ++iter) {
        Vec rd = qp.quad * it.x + qp.linear + G.transpose() * it.z;
        if (p > 0) rd += A.transpose() * it.y;
        Vec rp = (p > 0) ? Vec(A * it.x - b) : Vec(0);
        Vec rg = G * it.x + it.s - h;
        double mu = it.s.dot(it.z) / m;

        double pinf = rg.cwiseAbs().maxCoeff();
        if (p > 0) pinf = std::max(pinf, rp.cwiseAbs().maxCoeff());
        double dinf = rd.cwiseAbs().maxCoeff();
        double po = primal_obj(it.x), dobj = dual_obj(it.x, it.y, it.z);
        double gap = std::abs(po - dobj) / (1.0 + std::abs(po) + std::abs(dobj));

        if (pinf <= tol && dinf <= tol && gap <= tol)
            return finish(QpStatus::optimal, it, iter);

        // Diverging duals with a valid Farkas direction certify that no
        // feasible point exists.
        double dual_norm = it.z.cwiseAbs().maxCoeff();
        if (p > 0) dual_norm = std::max(dual_norm, it.y.cwiseAbs().maxCoeff());
        if (dual_norm > 1e5) {
            Vec yn = (p > 0) ? Vec(it.y / dual_norm) : Vec(0);
            Vec zn = it.z / dual_norm;
            Vec atv = G.transpose() * zn;
            if (p > 0) atv += A.transpose() * yn;
            double val = h.dot(zn) + ((p > 0) ? b.dot(yn) : 0.0);
            if (atv.cwiseAbs().maxCoeff() <= 1e-7 && val < -1e-7)
                return finish(QpStatus::infeasible, it, iter);
        }

        // Stagnating primal residual with vanishing complementarity is the
        // slow-divergence signature of an infeasible problem.
        if (pinf > std::max(1e2 * tol, 1e-7) && mu < 1e-10) {
            if (pinf > 0.9 * pinf_prev) ++stalled;
            else stalled = 0;
            if (stalled >= 25) {
                Vec yn = (p > 0) ? Vec(it.y / std::max(1.0, dual_norm)) : Vec(0);
                Vec zn = it.z / std::max(1.0, dual_norm);
                Vec atv = G.transpose() * zn;
                if (p > 0) atv += A.transpose() * yn;
                double val = h.dot(zn) + ((p > 0) ? b.dot(yn) : 0.0);
                if (atv.cwiseAbs().maxCoeff() <= 1e-6 && val < -1e-8)
                    return finish(QpStatus::infeasible, it, iter);
                consider_best(iter);
                best.status = QpStatus::limit;
                return best;
            }
        }
        pinf_prev = pinf;
        consider_best(iter);

        Vec w = it.s.cwiseQuotient(it.z);
        if (!kkt.factor(w)) {
            best.status = QpStatus::limit;
            return best;
        }

        Vec rhs(n + p + m);
        rhs.head(n) = -rd;
        rhs.segment(n, p) = -rp;
        rhs.tail(m) = -rg + it.s; // -rg + (s.*z)./z

        Vec aff = kkt.solve(rhs, w);
        Vec dza = aff.tail(m);
        Vec dsa = -it.s - w.cwiseProduct(dza);

        double alpha_aff = std::min(max_step(it.s, dsa), max_step(it.z, dza));
        double mu_aff = (it.s + alpha_aff * dsa).dot(it.z + alpha_aff * dza) / m;
        double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

        Vec rc = it.s.cwiseProduct(it.z) + dsa.cwiseProduct(dza);
        rc.array() -= sigma * mu;
        rhs.tail(m) = -rg + rc.cwiseQuotient(it.z);

        Vec dir = kkt.solve(rhs, w);
        Vec dx = dir.head(n), dy = dir.segment(n, p), dz = dir.tail(m);
        Vec ds = (-rc - it.s.cwiseProduct(dz)).cwiseQuotient(it.z);

        double tau = mu > 1e-4 ? 0.99 : (mu > 1e-9 ? 0.999 : 0.9999);
        double alpha = tau * std::min(max_step(it.s, ds), max_step(it.z, dz));
        alpha = std::min(alpha, 1.0);
        if (alpha < 1e-13) { // numerical dead end
            best.status = QpStatus::limit;
            return best;
        }

        it.x += alpha * dx;
        if (p > 0) it.y += alpha * dy;
        it.z += alpha * dz;
        it.s += alpha * ds;

        if (it.x.cwiseAbs().maxCoeff() > 1e14) {
            best.status = QpStatus::limit;
            return best;
        }
    }

    best.status = QpStatus::limit;
    return best;
}

QpSolution solve_qp(const QuadraticProgram& qp, double tol) {
    QpSolveOptions opt;
    opt.tol = tol;
    return solve_qp(qp, opt);
}

} // namespace restopo
