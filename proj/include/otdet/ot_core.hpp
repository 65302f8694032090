#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "otdet/csv.hpp"
#include "otdet/error.hpp"
#include "otdet/lp.hpp"

namespace otdet {

using Point = Eigen::VectorXd;

inline constexpr double kSimplexTol = 1e-12;

/// Probability measure with finitely many atoms. Weights are checked onto
/// the simplex at construction; a sum within kSimplexTol of one is
/// renormalized, anything further off is rejected.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;

    DiscreteMeasure(std::vector<Point> support, Eigen::VectorXd weights)
        : support_(std::move(support)), weights_(std::move(weights)) {
        if (support_.empty()) throw ValidationError("DiscreteMeasure: empty support");
        if (static_cast<std::size_t>(weights_.size()) != support_.size())
            throw DimensionError("DiscreteMeasure: " + std::to_string(support_.size()) + " atoms but " +
                                 std::to_string(weights_.size()) + " weights");
        const auto dim = support_.front().size();
        for (const auto& s : support_) {
            if (s.size() != dim) throw DimensionError("DiscreteMeasure: atoms of mixed dimension");
            if (!s.allFinite()) throw ValidationError("DiscreteMeasure: non-finite atom");
        }
        if (!weights_.allFinite() || (weights_.array() < 0.0).any())
            throw ValidationError("DiscreteMeasure: weights must be finite and nonnegative");
        const double total = weights_.sum();
        if (std::abs(total - 1.0) > kSimplexTol)
            throw ValidationError("DiscreteMeasure: weights sum to " + std::to_string(total));
        weights_ /= total;
    }

    static DiscreteMeasure dirac(Point at) {
        return DiscreteMeasure({std::move(at)}, Eigen::VectorXd::Ones(1));
    }

    static DiscreteMeasure uniform(std::vector<Point> support) {
        const auto n = static_cast<Eigen::Index>(support.size());
        if (n == 0) throw ValidationError("DiscreteMeasure: empty support");
        return DiscreteMeasure(std::move(support), Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
    }

    const std::vector<Point>& support() const { return support_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    std::size_t size() const { return support_.size(); }
    Eigen::Index dim() const { return support_.empty() ? 0 : support_.front().size(); }

private:
    std::vector<Point> support_;
    Eigen::VectorXd weights_;
};

/// Pairwise Euclidean distances over a pooled point list.
struct CostMatrix {
    Eigen::MatrixXd D;
    std::vector<Point> points;
};

inline void require_uniform_dim(const std::vector<Point>& points, const char* who) {
    if (points.empty()) throw ValidationError(std::string(who) + ": empty point list");
    const auto d = points.front().size();
    for (const auto& p : points)
        if (p.size() != d) throw DimensionError(std::string(who) + ": points of mixed dimension");
}

inline CostMatrix cost_matrix(const std::vector<Point>& points) {
    require_uniform_dim(points, "cost_matrix");
    const auto n = static_cast<Eigen::Index>(points.size());
    CostMatrix c{Eigen::MatrixXd::Zero(n, n), points};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d = (points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]).norm();
            c.D(i, j) = d;
            c.D(j, i) = d;
        }
    return c;
}

/// Exact 1-Wasserstein distance: optimal value of the transportation LP with
/// Euclidean ground cost.
inline double w1_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double tol = 1e-10) {
    if (mu.dim() != nu.dim()) throw DimensionError("w1_distance: measures of different dimension");
    const std::size_t m = mu.size(), n = nu.size();
    lp::LinearProgram prog(lp::Sense::minimize);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            prog.add_variable(0.0, lp::kInf, (mu.support()[i] - nu.support()[j]).norm());
    // One marginal row is redundant; dropping the last column-sum row keeps
    // the system full rank.
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = prog.add_row(lp::Relation::equal, mu.weights()[static_cast<Eigen::Index>(i)]);
        for (std::size_t j = 0; j < n; ++j) prog.add_coefficient(r, i * n + j, 1.0);
    }
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const auto r = prog.add_row(lp::Relation::equal, nu.weights()[static_cast<Eigen::Index>(j)]);
        for (std::size_t i = 0; i < m; ++i) prog.add_coefficient(r, i * n + j, 1.0);
    }
    const auto sol = lp::solve(prog, tol);
    if (sol.status != lp::Status::optimal)
        throw NumericalError(std::string("w1_distance: transport LP ended with status ") + lp::to_string(sol.status));
    return std::max(0.0, sol.objective_value);
}

/// Total variation between two weight vectors on a common support.
inline double tv_common_support(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != q.size()) throw DimensionError("tv_common_support: length mismatch");
    const double overlap = p.cwiseMin(q).sum();
    return std::clamp(1.0 - overlap, 0.0, 1.0);
}

// CSV rows `w,x1,...,xd`.
inline void write_measure_csv(std::ostream& os, const DiscreteMeasure& mu) {
    os << "w";
    for (Eigen::Index k = 0; k < mu.dim(); ++k) os << ",x" << k + 1;
    os << '\n';
    for (std::size_t i = 0; i < mu.size(); ++i) {
        os << csv::format_double(mu.weights()[static_cast<Eigen::Index>(i)]);
        for (Eigen::Index k = 0; k < mu.dim(); ++k) os << ',' << csv::format_double(mu.support()[i][k]);
        os << '\n';
    }
}

inline DiscreteMeasure read_measure_csv(std::istream& is, const std::string& source = "<stream>") {
    const auto table = csv::read_numeric(is, source);
    if (table.header.empty() || table.header.front() != "w")
        throw IoError(source + ": expected header starting with 'w'");
    std::vector<Point> support;
    Eigen::VectorXd w(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        w[static_cast<Eigen::Index>(i)] = row.front();
        support.emplace_back(Eigen::Map<const Eigen::VectorXd>(row.data() + 1, static_cast<Eigen::Index>(row.size() - 1)));
    }
    return DiscreteMeasure(std::move(support), std::move(w));
}

}  // namespace otdet
