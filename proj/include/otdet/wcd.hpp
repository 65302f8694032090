#pragma once

// Worst-case distributions over two 1-Wasserstein balls centred at the
// empirical nominal and attacked residual measures, via a finite LP on the
// pooled training support.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "otdet/error.hpp"
#include "otdet/lp.hpp"
#include "otdet/ot_core.hpp"

namespace otdet {

struct TrainingSet {
    std::vector<Point> nominal;   // X1
    std::vector<Point> attacked;  // X2
};

/// Pooled support s_1..s_n (nominal atoms first) with the two empirical
/// weight vectors expressed on it.
struct PooledSupport {
    std::vector<Point> support;
    Eigen::VectorXd q1, q2;
    std::size_t n1 = 0, n2 = 0;
    std::size_t size() const { return support.size(); }
};

inline PooledSupport pool(const TrainingSet& ts) {
    if (ts.nominal.empty() || ts.attacked.empty())
        throw ValidationError("pool: both training sets need at least one residual");
    PooledSupport ps;
    ps.n1 = ts.nominal.size();
    ps.n2 = ts.attacked.size();
    ps.support = ts.nominal;
    ps.support.insert(ps.support.end(), ts.attacked.begin(), ts.attacked.end());
    require_uniform_dim(ps.support, "pool");
    const auto n = static_cast<Eigen::Index>(ps.size());
    const auto n1 = static_cast<Eigen::Index>(ps.n1);
    ps.q1 = Eigen::VectorXd::Zero(n);
    ps.q2 = Eigen::VectorXd::Zero(n);
    ps.q1.head(n1).setConstant(1.0 / static_cast<double>(ps.n1));
    ps.q2.tail(n - n1).setConstant(1.0 / static_cast<double>(ps.n2));
    return ps;
}

struct WcdOptions {
    // Zero radii are meaningful only as a degenerate check (the balls collapse
    // to the empirical measures); production use requires eps > 0.
    bool allow_zero_radius = false;
};

struct WcdProblem {
    PooledSupport pooled;
    CostMatrix cost;
    double eps1 = 0.0, eps2 = 0.0;

    std::size_t size() const { return pooled.size(); }
};

inline WcdProblem make_problem(const TrainingSet& ts, double eps1, double eps2, WcdOptions opt = {}) {
    const auto bad = [&](double e) { return !std::isfinite(e) || e < 0.0 || (e == 0.0 && !opt.allow_zero_radius); };
    if (bad(eps1) || bad(eps2)) throw ValidationError("ambiguity radii must be strictly positive");
    WcdProblem prob;
    prob.pooled = pool(ts);
    prob.cost = cost_matrix(prob.pooled.support);
    prob.eps1 = eps1;
    prob.eps2 = eps2;
    return prob;
}

/// Variable layout of the finite LP: p1[n], p2[n], G1[n*n], G2[n*n], t[n].
struct WcdLayout {
    std::size_t n;
    std::size_t p(int k, std::size_t l) const { return (k == 1 ? 0 : n) + l; }
    std::size_t gamma(int k, std::size_t l, std::size_t m) const { return 2 * n + (k == 1 ? 0 : n * n) + l * n + m; }
    std::size_t t(std::size_t l) const { return 2 * n + 2 * n * n + l; }
    std::size_t num_vars() const { return 2 * n * n + 3 * n; }
    std::size_t num_rows() const { return 6 * n + 4; }
};

/// Rows, in order: two transport-cost caps; row- and column-marginal
/// equalities for k = 1 then k = 2; overlap caps t <= p1 and t <= p2; the two
/// simplex equalities. Objective: maximize sum of t.
inline lp::LinearProgram build_lp(const WcdProblem& prob) {
    const std::size_t n = prob.size();
    const WcdLayout lay{n};
    lp::LinearProgram prog(lp::Sense::maximize);
    for (int k = 1; k <= 2; ++k)
        for (std::size_t l = 0; l < n; ++l) prog.add_variable(0.0, lp::kInf, 0.0);
    for (int k = 1; k <= 2; ++k)
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t m = 0; m < n; ++m) prog.add_variable(0.0, lp::kInf, 0.0);
    for (std::size_t l = 0; l < n; ++l) prog.add_variable(0.0, lp::kInf, 1.0);

    const auto& D = prob.cost.D;
    for (int k = 1; k <= 2; ++k) {
        const auto r = prog.add_row(lp::Relation::less_equal, k == 1 ? prob.eps1 : prob.eps2);
        for (std::size_t l = 0; l < n; ++l)
            for (std::size_t m = 0; m < n; ++m) {
                const double d = D(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(m));
                if (d != 0.0) prog.add_coefficient(r, lay.gamma(k, l, m), d);
            }
    }
    for (int k = 1; k <= 2; ++k) {
        const auto& q = k == 1 ? prob.pooled.q1 : prob.pooled.q2;
        for (std::size_t l = 0; l < n; ++l) {
            const auto r = prog.add_row(lp::Relation::equal, q[static_cast<Eigen::Index>(l)]);
            for (std::size_t m = 0; m < n; ++m) prog.add_coefficient(r, lay.gamma(k, l, m), 1.0);
        }
        for (std::size_t m = 0; m < n; ++m) {
            const auto r = prog.add_row(lp::Relation::equal, 0.0);
            for (std::size_t l = 0; l < n; ++l) prog.add_coefficient(r, lay.gamma(k, l, m), 1.0);
            prog.add_coefficient(r, lay.p(k, m), -1.0);
        }
    }
    for (int k = 1; k <= 2; ++k)
        for (std::size_t l = 0; l < n; ++l) {
            const auto r = prog.add_row(lp::Relation::less_equal, 0.0);
            prog.add_coefficient(r, lay.t(l), 1.0);
            prog.add_coefficient(r, lay.p(k, l), -1.0);
        }
    for (int k = 1; k <= 2; ++k) {
        const auto r = prog.add_row(lp::Relation::equal, 1.0);
        for (std::size_t l = 0; l < n; ++l) prog.add_coefficient(r, lay.p(k, l), 1.0);
    }
    prog.canonicalize();
    return prog;
}

inline constexpr double kTieTol = 1e-9;

struct WcdSolution {
    Eigen::VectorXd p1, p2;
    Eigen::MatrixXd gamma1, gamma2;
    Eigen::VectorXd t;
    double v_star = 0.0;
    double tv_star = 1.0;
    // Equal to v_star. The minimax risk is 1 - inf TV = sum of min(p1, p2).
    double minmax_risk = 0.0;
    Eigen::VectorXd phi;
    std::size_t lp_iterations = 0;
};

/// Test values on the atoms: 1 where the attacked weight dominates, 0 where
/// the nominal weight dominates, 1/2 on ties (randomize at decision time).
inline Eigen::VectorXd on_support_test(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2,
                                       double tie_tol = kTieTol) {
    if (p1.size() != p2.size()) throw DimensionError("on_support_test: length mismatch");
    Eigen::VectorXd phi(p1.size());
    for (Eigen::Index l = 0; l < p1.size(); ++l) {
        if (p2[l] > p1[l] + tie_tol) phi[l] = 1.0;
        else if (p2[l] < p1[l] - tie_tol) phi[l] = 0.0;
        else phi[l] = 0.5;
    }
    return phi;
}

inline Eigen::VectorXd on_support_test(const WcdSolution& sol) { return on_support_test(sol.p1, sol.p2); }

inline WcdSolution solve_wcd(const WcdProblem& prob, double tol = 1e-9) {
    const auto prog = build_lp(prob);
    const auto res = lp::solve(prog, tol);
    if (res.status == lp::Status::infeasible || res.status == lp::Status::unbounded)
        throw InternalError(std::string("solve_wcd: LP reported ") + lp::to_string(res.status) +
                            "; the program is feasible and bounded by construction");
    if (res.status != lp::Status::optimal)
        throw NumericalError(std::string("solve_wcd: solver stopped with status ") + lp::to_string(res.status));

    const std::size_t n = prob.size();
    const WcdLayout lay{n};
    const auto N = static_cast<Eigen::Index>(n);
    WcdSolution sol;
    sol.p1.resize(N);
    sol.p2.resize(N);
    sol.t.resize(N);
    sol.gamma1.resize(N, N);
    sol.gamma2.resize(N, N);
    for (std::size_t l = 0; l < n; ++l) {
        const auto L = static_cast<Eigen::Index>(l);
        sol.p1[L] = res.x[lay.p(1, l)];
        sol.p2[L] = res.x[lay.p(2, l)];
        sol.t[L] = res.x[lay.t(l)];
        for (std::size_t m = 0; m < n; ++m) {
            sol.gamma1(L, static_cast<Eigen::Index>(m)) = res.x[lay.gamma(1, l, m)];
            sol.gamma2(L, static_cast<Eigen::Index>(m)) = res.x[lay.gamma(2, l, m)];
        }
    }
    sol.v_star = res.objective_value;
    sol.tv_star = 1.0 - sol.v_star;
    sol.minmax_risk = sol.v_star;
    sol.phi = on_support_test(sol);
    sol.lp_iterations = res.iterations;
    return sol;
}

struct WcdReport {
    double row_marginal = 0.0;
    double col_marginal = 0.0;
    double cost_cap = 0.0;
    double simplex = 0.0;
    double nonnegativity = 0.0;
    double overlap = 0.0;  // max |t_l - min(p1_l, p2_l)|
    bool pass = false;

    double max_violation() const {
        return std::max({row_marginal, col_marginal, cost_cap, simplex, nonnegativity, overlap});
    }
};

/// Audits every constraint of the finite LP. Sums are compared net of a
/// floating-point summation allowance of (terms) * machine epsilon.
inline WcdReport verify_wcd(const WcdProblem& prob, const WcdSolution& sol, double tol) {
    const auto N = static_cast<Eigen::Index>(prob.size());
    if (sol.p1.size() != N || sol.p2.size() != N || sol.t.size() != N || sol.gamma1.rows() != N ||
        sol.gamma1.cols() != N || sol.gamma2.rows() != N || sol.gamma2.cols() != N)
        throw DimensionError("verify_wcd: solution does not match the problem size");
    const double ulp = std::numeric_limits<double>::epsilon();
    const auto excess = [&](double v, double terms, double scale = 1.0) {
        return std::max(0.0, v - terms * ulp * scale);
    };
    WcdReport rep;
    const auto audit = [&](const Eigen::MatrixXd& G, const Eigen::VectorXd& q, const Eigen::VectorXd& p, double eps) {
        const double n = static_cast<double>(N);
        rep.row_marginal = std::max(rep.row_marginal, excess((G.rowwise().sum() - q).cwiseAbs().maxCoeff(), n));
        rep.col_marginal = std::max(rep.col_marginal, excess((G.colwise().sum().transpose() - p).cwiseAbs().maxCoeff(), n));
        const double cost = G.cwiseProduct(prob.cost.D).sum();
        rep.cost_cap = std::max(rep.cost_cap, excess(cost - eps, n * n, prob.cost.D.maxCoeff()));
        rep.simplex = std::max(rep.simplex, excess(std::abs(p.sum() - 1.0), n));
        rep.nonnegativity = std::max({rep.nonnegativity, -G.minCoeff(), -p.minCoeff()});
    };
    audit(sol.gamma1, prob.pooled.q1, sol.p1, prob.eps1);
    audit(sol.gamma2, prob.pooled.q2, sol.p2, prob.eps2);
    rep.nonnegativity = std::max({0.0, rep.nonnegativity, -sol.t.minCoeff()});
    rep.overlap = (sol.t - sol.p1.cwiseMin(sol.p2)).cwiseAbs().maxCoeff();
    rep.pass = rep.max_violation() <= tol;
    return rep;
}

/// The feasible point p_k = Q_k, Gamma_k = diag(Q_k), t = 0.
inline WcdSolution feasible_start(const WcdProblem& prob) {
    WcdSolution s;
    s.p1 = prob.pooled.q1;
    s.p2 = prob.pooled.q2;
    s.gamma1 = prob.pooled.q1.asDiagonal();
    s.gamma2 = prob.pooled.q2.asDiagonal();
    s.t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(prob.size()));
    s.v_star = 0.0;
    s.tv_star = 1.0;
    s.minmax_risk = 0.0;
    s.phi = on_support_test(s);
    return s;
}

namespace json_io {

inline nlohmann::json to_json(const Eigen::VectorXd& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::VectorXd r = m.row(i).transpose();
        rows.push_back(to_json(r));
    }
    return rows;
}

inline Eigen::VectorXd vector_from(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw IoError(std::string(what) + ": expected a numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw IoError(std::string(what) + ": non-numeric entry");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

inline Eigen::MatrixXd matrix_from(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw IoError(std::string(what) + ": expected an array of rows");
    const auto cols = vector_from(j[0], what).size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto r = vector_from(j[i], what);
        if (r.size() != cols) throw IoError(std::string(what) + ": ragged rows");
        m.row(static_cast<Eigen::Index>(i)) = r.transpose();
    }
    return m;
}

}  // namespace json_io

/// {support, p1, p2, V_star, tv_star, minmax_risk, eps1, eps2, bandwidth_hint}
inline nlohmann::json wcd_to_json(const WcdProblem& prob, const WcdSolution& sol, double bandwidth_hint) {
    nlohmann::json support = nlohmann::json::array();
    for (const auto& s : prob.pooled.support) support.push_back(json_io::to_json(s));
    return {
        {"support", support},
        {"p1", json_io::to_json(sol.p1)},
        {"p2", json_io::to_json(sol.p2)},
        {"V_star", sol.v_star},
        {"tv_star", sol.tv_star},
        {"minmax_risk", sol.minmax_risk},
        {"eps1", prob.eps1},
        {"eps2", prob.eps2},
        {"bandwidth_hint", bandwidth_hint},
        {"n1", prob.pooled.n1},
        {"n2", prob.pooled.n2},
    };
}

}  // namespace otdet
