#pragma once

// Sparse linear programs and an exact primal revised simplex solver with
// bounded variables.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "otdet/error.hpp"

namespace otdet::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };
enum class Relation { less_equal, equal, greater_equal };
enum class Status { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// A linear program in row form: objective, rows with relation and right-hand
/// side, per-variable bounds and a sparse coefficient list.
class LinearProgram {
public:
    explicit LinearProgram(Sense sense = Sense::minimize) : sense_(sense) {}

    std::size_t add_variable(double lower, double upper, double cost = 0.0, std::string name = {}) {
        if (std::isnan(lower) || std::isnan(upper) || lower == kInf || upper == -kInf || lower > upper)
            throw ValidationError("invalid bounds for variable " + std::to_string(lower_.size()));
        if (!std::isfinite(cost)) throw ValidationError("non-finite objective coefficient");
        lower_.push_back(lower);
        upper_.push_back(upper);
        cost_.push_back(cost);
        var_names_.push_back(std::move(name));
        return lower_.size() - 1;
    }

    std::size_t add_row(Relation rel, double rhs, std::string name = {}) {
        if (!std::isfinite(rhs)) throw ValidationError("non-finite right-hand side");
        relation_.push_back(rel);
        rhs_.push_back(rhs);
        row_names_.push_back(std::move(name));
        return rhs_.size() - 1;
    }

    void add_coefficient(std::size_t row, std::size_t col, double value) {
        if (row >= num_rows() || col >= num_vars())
            throw DimensionError("coefficient index out of range");
        if (!std::isfinite(value)) throw ValidationError("non-finite constraint coefficient");
        triplets_.push_back({row, col, value});
        canonical_ = false;
    }

    void set_cost(std::size_t col, double value) {
        if (col >= num_vars()) throw DimensionError("objective index out of range");
        if (!std::isfinite(value)) throw ValidationError("non-finite objective coefficient");
        cost_[col] = value;
    }

    void set_rhs(std::size_t row, double rhs) {
        if (row >= num_rows()) throw DimensionError("row index out of range");
        if (!std::isfinite(rhs)) throw ValidationError("non-finite right-hand side");
        rhs_[row] = rhs;
    }

    void set_bounds(std::size_t col, double lower, double upper) {
        if (col >= num_vars()) throw DimensionError("variable index out of range");
        if (std::isnan(lower) || std::isnan(upper) || lower == kInf || upper == -kInf || lower > upper)
            throw ValidationError("invalid bounds for variable " + std::to_string(col));
        lower_[col] = lower;
        upper_[col] = upper;
    }

    void set_sense(Sense s) { sense_ = s; }

    /// Sorts triplets column-major, merges duplicates by summation and drops
    /// exact zeros.
    void canonicalize() {
        if (canonical_) return;
        std::sort(triplets_.begin(), triplets_.end(), [](const Triplet& a, const Triplet& b) {
            return a.col != b.col ? a.col < b.col : a.row < b.row;
        });
        std::vector<Triplet> merged;
        merged.reserve(triplets_.size());
        for (const auto& t : triplets_) {
            if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col)
                merged.back().value += t.value;
            else
                merged.push_back(t);
        }
        std::erase_if(merged, [](const Triplet& t) { return t.value == 0.0; });
        triplets_ = std::move(merged);
        canonical_ = true;
    }

    Sense sense() const { return sense_; }
    std::size_t num_vars() const { return lower_.size(); }
    std::size_t num_rows() const { return rhs_.size(); }
    const std::vector<double>& costs() const { return cost_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }
    const std::vector<Relation>& relations() const { return relation_; }
    const std::vector<double>& rhs() const { return rhs_; }
    const std::vector<Triplet>& triplets() const { return triplets_; }
    const std::vector<std::string>& var_names() const { return var_names_; }
    const std::vector<std::string>& row_names() const { return row_names_; }
    bool is_canonical() const { return canonical_; }

private:
    Sense sense_;
    std::vector<double> cost_, lower_, upper_;
    std::vector<std::string> var_names_;
    std::vector<Relation> relation_;
    std::vector<double> rhs_;
    std::vector<std::string> row_names_;
    std::vector<Triplet> triplets_;
    bool canonical_ = true;
};

struct LpSolution {
    Status status = Status::iteration_limit;
    std::vector<double> x;
    double objective_value = 0.0;
    double max_primal_infeasibility = 0.0;
    std::size_t iterations = 0;
};

struct SolverOptions {
    double tol = 1e-8;
    std::size_t max_iters = 1'000'000;
    std::size_t refactor_interval = 100;
    // Consecutive non-improving pivots before switching to Bland's rule.
    std::size_t bland_after = 500;
};

struct ViolationReport {
    std::vector<double> row_violation;
    std::vector<double> bound_violation;
    double max_row_violation = 0.0;
    double max_bound_violation = 0.0;
    bool feasible = true;  // max_violation() <= tol
    double max_violation() const { return std::max(max_row_violation, max_bound_violation); }
};

inline ViolationReport check_solution(const LinearProgram& lp, const std::vector<double>& x,
                                      double tol = 0.0) {
    if (x.size() != lp.num_vars())
        throw DimensionError("check_solution: x has " + std::to_string(x.size()) + " entries, LP has " +
                             std::to_string(lp.num_vars()) + " variables");
    std::vector<double> activity(lp.num_rows(), 0.0);
    for (const auto& t : lp.triplets()) activity[t.row] += t.value * x[t.col];

    ViolationReport rep;
    rep.row_violation.resize(lp.num_rows());
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        const double a = activity[i], b = lp.rhs()[i];
        double v = 0.0;
        switch (lp.relations()[i]) {
            case Relation::less_equal: v = std::max(0.0, a - b); break;
            case Relation::greater_equal: v = std::max(0.0, b - a); break;
            case Relation::equal: v = std::abs(a - b); break;
        }
        rep.row_violation[i] = v;
        rep.max_row_violation = std::max(rep.max_row_violation, v);
    }
    rep.bound_violation.resize(lp.num_vars());
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        const double v = std::max({0.0, lp.lower()[j] - x[j], x[j] - lp.upper()[j]});
        rep.bound_violation[j] = v;
        rep.max_bound_violation = std::max(rep.max_bound_violation, v);
    }
    rep.feasible = rep.max_violation() <= tol;
    return rep;
}

namespace detail {

enum class VarState : std::uint8_t { basic, at_lower, at_upper, free_zero };

// Every row i carries a logical (slack) column with bounds set by the row
// relation, so the constraint system is A x + s = b. Rows whose initial slack
// value falls outside its bounds get an artificial column; phase one drives
// the artificials to zero, after which they are fixed at [0, 0].
class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {
        m_ = lp.num_rows();
        n_struct_ = lp.num_vars();
        build_columns();
    }

    LpSolution run() {
        LpSolution sol;
        initial_basis();
        refactor();

        if (num_artificial_ > 0) {
            set_phase_costs(/*phase_one=*/true);
            const Status st = iterate();
            if (st == Status::iteration_limit) return finish(Status::iteration_limit);
            double infeas = 0.0;
            for (std::size_t j = n_struct_ + m_; j < n_total_; ++j) infeas += x_[j];
            double bscale = 1.0;
            for (double b : lp_.rhs()) bscale = std::max(bscale, std::abs(b));
            if (infeas > 10.0 * opt_.tol * bscale) return finish(Status::infeasible);
            for (std::size_t j = n_struct_ + m_; j < n_total_; ++j) {
                up_[j] = 0.0;
                if (state_[j] != VarState::basic) {
                    state_[j] = VarState::at_lower;
                    x_[j] = 0.0;
                }
            }
            refactor();
        }
        set_phase_costs(/*phase_one=*/false);
        return finish(iterate());
    }

private:
    void build_columns() {
        // Structural columns from the canonical triplet list.
        LinearProgram copy = lp_;
        copy.canonicalize();
        col_start_.assign(1, 0);
        std::size_t k = 0;
        const auto& trip = copy.triplets();
        for (std::size_t j = 0; j < n_struct_; ++j) {
            while (k < trip.size() && trip[k].col == j) {
                row_idx_.push_back(trip[k].row);
                val_.push_back(trip[k].value);
                ++k;
            }
            col_start_.push_back(row_idx_.size());
        }
        lo_ = lp_.lower();
        up_ = lp_.upper();
        const double sign = lp_.sense() == Sense::maximize ? -1.0 : 1.0;
        orig_cost_.resize(n_struct_);
        for (std::size_t j = 0; j < n_struct_; ++j) orig_cost_[j] = sign * lp_.costs()[j];
        // Logical columns.
        for (std::size_t i = 0; i < m_; ++i) {
            row_idx_.push_back(i);
            val_.push_back(1.0);
            col_start_.push_back(row_idx_.size());
            switch (lp_.relations()[i]) {
                case Relation::less_equal: lo_.push_back(0.0); up_.push_back(kInf); break;
                case Relation::greater_equal: lo_.push_back(-kInf); up_.push_back(0.0); break;
                case Relation::equal: lo_.push_back(0.0); up_.push_back(0.0); break;
            }
        }
        n_total_ = n_struct_ + m_;
    }

    void initial_basis() {
        x_.assign(n_total_, 0.0);
        state_.assign(n_total_, VarState::at_lower);
        for (std::size_t j = 0; j < n_struct_; ++j) place_at_bound(j);
        std::vector<double> resid = lp_.rhs();
        for (std::size_t j = 0; j < n_struct_; ++j) {
            if (x_[j] == 0.0) continue;
            for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) resid[row_idx_[p]] -= val_[p] * x_[j];
        }
        head_.assign(m_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t s = n_struct_ + i;
            const double r = resid[i];
            if (r >= lo_[s] - opt_.tol && r <= up_[s] + opt_.tol) {
                state_[s] = VarState::basic;
                x_[s] = r;
                head_[i] = s;
                continue;
            }
            // Slack parked at its nearest bound; artificial absorbs the rest.
            const double sv = std::clamp(r, lo_[s], up_[s]);
            x_[s] = sv;
            state_[s] = (sv == lo_[s]) ? VarState::at_lower : VarState::at_upper;
            const double gap = r - sv;
            row_idx_.push_back(i);
            val_.push_back(gap > 0 ? 1.0 : -1.0);
            col_start_.push_back(row_idx_.size());
            lo_.push_back(0.0);
            up_.push_back(kInf);
            x_.push_back(std::abs(gap));
            state_.push_back(VarState::basic);
            head_[i] = n_total_;
            ++n_total_;
            ++num_artificial_;
        }
        cost_.assign(n_total_, 0.0);
    }

    void place_at_bound(std::size_t j) {
        if (std::isfinite(lo_[j])) {
            x_[j] = lo_[j];
            state_[j] = VarState::at_lower;
        } else if (std::isfinite(up_[j])) {
            x_[j] = up_[j];
            state_[j] = VarState::at_upper;
        } else {
            x_[j] = 0.0;
            state_[j] = VarState::free_zero;
        }
    }

    void set_phase_costs(bool phase_one) {
        std::fill(cost_.begin(), cost_.end(), 0.0);
        if (phase_one) {
            for (std::size_t j = n_struct_ + m_; j < n_total_; ++j) cost_[j] = 1.0;
        } else {
            std::copy(orig_cost_.begin(), orig_cost_.end(), cost_.begin());
        }
        recompute_duals();
    }

    // Rebuilds the explicit basis inverse from a sparse LU factorization and
    // recomputes basic values and duals from scratch.
    void refactor() {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(3 * m_);
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j = head_[i];
            for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p)
                trips.emplace_back(static_cast<int>(row_idx_[p]), static_cast<int>(i), val_[p]);
        }
        Eigen::SparseMatrix<double> basis(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        basis.setFromTriplets(trips.begin(), trips.end());
        basis.makeCompressed();
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(basis);
        lu.factorize(basis);
        if (lu.info() != Eigen::Success) throw NumericalError("simplex: basis matrix is singular");
        binv_ = lu.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_)));
        if (!binv_.allFinite()) throw NumericalError("simplex: basis inverse is not finite");

        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(lp_.rhs().data(), static_cast<Eigen::Index>(m_));
        for (std::size_t j = 0; j < n_total_; ++j) {
            if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
            for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) rhs[row_idx_[p]] -= val_[p] * x_[j];
        }
        const Eigen::VectorXd xb = binv_ * rhs;
        for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] = xb[static_cast<Eigen::Index>(i)];
        recompute_duals();
        since_refactor_ = 0;
    }

    void recompute_duals() {
        Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) cb[static_cast<Eigen::Index>(i)] = cost_[head_[i]];
        y_ = binv_.transpose() * cb;
    }

    double reduced_cost(std::size_t j) const {
        double d = cost_[j];
        for (std::size_t p = col_start_[j]; p < col_start_[j + 1]; ++p) d -= y_[static_cast<Eigen::Index>(row_idx_[p])] * val_[p];
        return d;
    }

    bool eligible(std::size_t j, double d) const {
        const double dtol = opt_.tol;
        switch (state_[j]) {
            case VarState::basic: return false;
            case VarState::at_lower: return lo_[j] < up_[j] && d < -dtol;
            case VarState::at_upper: return lo_[j] < up_[j] && d > dtol;
            case VarState::free_zero: return std::abs(d) > dtol;
        }
        return false;
    }

    // Returns the entering column (npos if none) and its reduced cost.
    std::size_t price(bool bland, double& d_enter) const {
        std::size_t best = npos;
        double best_score = 0.0;
        for (std::size_t j = 0; j < n_total_; ++j) {
            if (state_[j] == VarState::basic) continue;
            const double d = reduced_cost(j);
            if (!eligible(j, d)) continue;
            if (bland) {
                d_enter = d;
                return j;
            }
            if (std::abs(d) > best_score) {
                best_score = std::abs(d);
                best = j;
                d_enter = d;
            }
        }
        return best;
    }

    Status iterate() {
        bool bland = false;
        std::size_t stalled = 0;
        bool verified = false;
        while (true) {
            if (iterations_ >= opt_.max_iters) return Status::iteration_limit;
            if (since_refactor_ >= opt_.refactor_interval) refactor();

            double d_q = 0.0;
            const std::size_t q = price(bland, d_q);
            if (q == npos) {
                if (verified) return Status::optimal;
                refactor();  // confirm with fresh duals before declaring optimality
                verified = true;
                continue;
            }
            verified = false;

            // alpha = B^{-1} a_q
            alpha_.setZero(static_cast<Eigen::Index>(m_));
            for (std::size_t p = col_start_[q]; p < col_start_[q + 1]; ++p)
                alpha_.noalias() += val_[p] * binv_.col(static_cast<Eigen::Index>(row_idx_[p]));
            const double dir = d_q < 0.0 ? 1.0 : -1.0;

            // Ratio test. Basic variable i moves at rate -dir * alpha_i.
            const double piv_tol = 1e-9;
            const double ftol = opt_.tol;
            double range = up_[q] - lo_[q];
            if (state_[q] == VarState::free_zero) range = kInf;
            std::size_t leave = npos;
            double theta = range;
            if (!bland) {
                // Harris two-pass: relaxed bound first, then the largest pivot
                // among candidates within it.
                double relaxed = kInf;
                for (std::size_t i = 0; i < m_; ++i) {
                    const double a = alpha_[static_cast<Eigen::Index>(i)];
                    if (std::abs(a) <= piv_tol) continue;
                    const double rate = -dir * a;
                    const std::size_t b = head_[i];
                    double r = kInf;
                    if (rate < 0.0 && lo_[b] > -kInf) r = (x_[b] - lo_[b] + ftol) / -rate;
                    else if (rate > 0.0 && up_[b] < kInf) r = (up_[b] - x_[b] + ftol) / rate;
                    relaxed = std::min(relaxed, r);
                }
                if (relaxed < range) {
                    double best_piv = 0.0;
                    for (std::size_t i = 0; i < m_; ++i) {
                        const double a = alpha_[static_cast<Eigen::Index>(i)];
                        if (std::abs(a) <= piv_tol) continue;
                        const double rate = -dir * a;
                        const std::size_t b = head_[i];
                        double r = kInf;
                        if (rate < 0.0 && lo_[b] > -kInf) r = (x_[b] - lo_[b]) / -rate;
                        else if (rate > 0.0 && up_[b] < kInf) r = (up_[b] - x_[b]) / rate;
                        if (r <= relaxed && std::abs(a) > best_piv) {
                            best_piv = std::abs(a);
                            leave = i;
                            theta = std::max(0.0, r);
                        }
                    }
                }
            } else {
                for (std::size_t i = 0; i < m_; ++i) {
                    const double a = alpha_[static_cast<Eigen::Index>(i)];
                    if (std::abs(a) <= piv_tol) continue;
                    const double rate = -dir * a;
                    const std::size_t b = head_[i];
                    double r = kInf;
                    if (rate < 0.0 && lo_[b] > -kInf) r = (x_[b] - lo_[b]) / -rate;
                    else if (rate > 0.0 && up_[b] < kInf) r = (up_[b] - x_[b]) / rate;
                    if (!std::isfinite(r)) continue;
                    r = std::max(0.0, r);
                    // Smallest ratio; ties go to the lowest variable index.
                    const bool better = r < theta - 1e-12;
                    const bool tie = r <= theta + 1e-12 && (leave == npos || head_[i] < head_[leave]);
                    if (better || tie) {
                        theta = r;
                        leave = i;
                    }
                }
            }
            if (leave == npos && !std::isfinite(theta)) return Status::unbounded;

            ++iterations_;
            ++since_refactor_;
            if (theta * std::abs(d_q) <= 1e-12) {
                if (++stalled >= opt_.bland_after) bland = true;
            } else {
                stalled = 0;
                bland = false;
            }

            const double step = dir * theta;
            if (step != 0.0) {
                x_[q] += step;
                for (std::size_t i = 0; i < m_; ++i) x_[head_[i]] -= step * alpha_[static_cast<Eigen::Index>(i)];
            }
            if (leave == npos) {  // bound flip
                if (dir > 0) {
                    x_[q] = up_[q];
                    state_[q] = VarState::at_upper;
                } else {
                    x_[q] = lo_[q];
                    state_[q] = VarState::at_lower;
                }
                continue;
            }

            const std::size_t b = head_[leave];
            const double rate = -dir * alpha_[static_cast<Eigen::Index>(leave)];
            if (rate < 0.0) {
                x_[b] = lo_[b];
                state_[b] = VarState::at_lower;
            } else {
                x_[b] = up_[b];
                state_[b] = VarState::at_upper;
            }
            if (lo_[b] == up_[b]) state_[b] = VarState::at_lower;

            const double a_r = alpha_[static_cast<Eigen::Index>(leave)];
            const Eigen::VectorXd rho = binv_.row(static_cast<Eigen::Index>(leave)).transpose();
            y_.noalias() += (d_q / a_r) * rho;
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(m_); ++k) {
                const double rk = rho[k];
                if (rk == 0.0) continue;
                binv_.col(k).noalias() -= (rk / a_r) * alpha_;
                binv_(static_cast<Eigen::Index>(leave), k) = rk / a_r;
            }
            head_[leave] = q;
            state_[q] = VarState::basic;
        }
    }

    LpSolution finish(Status st) {
        LpSolution sol;
        sol.status = st;
        sol.iterations = iterations_;
        sol.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_struct_));
        double obj = 0.0;
        for (std::size_t j = 0; j < n_struct_; ++j) obj += lp_.costs()[j] * sol.x[j];
        sol.objective_value = obj;
        sol.max_primal_infeasibility = check_solution(lp_, sol.x).max_violation();
        return sol;
    }

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    const LinearProgram& lp_;
    SolverOptions opt_;
    std::size_t m_ = 0, n_struct_ = 0, n_total_ = 0, num_artificial_ = 0;
    std::vector<std::size_t> col_start_, row_idx_;
    std::vector<double> val_;
    std::vector<double> lo_, up_, cost_, orig_cost_, x_;
    std::vector<VarState> state_;
    std::vector<std::size_t> head_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd y_, alpha_;
    std::size_t iterations_ = 0, since_refactor_ = 0;
};

}  // namespace detail

/// Solves the LP with a bounded-variable primal revised simplex (Dantzig
/// pricing, Harris ratio test, Bland's rule after prolonged stalling).
/// Infeasibility and unboundedness are reported through the status.
inline LpSolution solve(const LinearProgram& lp, const SolverOptions& opt) {
    if (!(opt.tol > 0.0)) throw ValidationError("solve: tol must be positive");
    if (lp.num_rows() == 0) {
        // Box-constrained: each variable independently goes to its best bound.
        LpSolution sol;
        sol.status = Status::optimal;
        sol.x.resize(lp.num_vars());
        const double sign = lp.sense() == Sense::maximize ? -1.0 : 1.0;
        for (std::size_t j = 0; j < lp.num_vars(); ++j) {
            const double c = sign * lp.costs()[j];
            const double lo = lp.lower()[j], up = lp.upper()[j];
            double v;
            if (c > 0) v = lo;
            else if (c < 0) v = up;
            else v = std::isfinite(lo) ? lo : (std::isfinite(up) ? up : 0.0);
            if (!std::isfinite(v)) {
                sol.status = Status::unbounded;
                v = std::isfinite(lo) ? lo : (std::isfinite(up) ? up : 0.0);
            }
            sol.x[j] = v;
            sol.objective_value += lp.costs()[j] * v;
        }
        return sol;
    }
    detail::RevisedSimplex simplex(lp, opt);
    return simplex.run();
}

inline LpSolution solve(const LinearProgram& lp, double tol = 1e-8, std::size_t max_iters = 1'000'000) {
    SolverOptions opt;
    opt.tol = tol;
    opt.max_iters = max_iters;
    return solve(lp, opt);
}

namespace detail {

inline std::string format_number(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline bool valid_mps_name(const std::string& s) {
    return !s.empty() && s.size() <= 8 && s.find_first_of(" \t\r\n") == std::string::npos && s[0] != '$';
}

// Labels are used only when every one is a valid, unique 8-character name.
inline std::vector<std::string> mps_names(const std::vector<std::string>& labels, char prefix) {
    std::unordered_set<std::string> seen;
    bool usable = true;
    for (const auto& l : labels) {
        if (!valid_mps_name(l) || l == "OBJ" || !seen.insert(l).second) {
            usable = false;
            break;
        }
    }
    if (usable) return labels;
    std::vector<std::string> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = prefix + std::to_string(i + 1);
    return out;
}

inline void mps_line(std::ostringstream& os, const char* f1, const std::string& f2, const std::string& f3,
                     const std::string& f4, const std::string& f5 = {}, const std::string& f6 = {}) {
    // Column layout of fixed MPS: fields start at 2, 5, 15, 25, 40, 50.
    std::string line = " ";
    line += f1;
    line.resize(4, ' ');
    line += f2;
    if (!f3.empty()) {
        line.resize(std::max<std::size_t>(line.size() + 1, 14), ' ');
        line += f3;
        line.resize(std::max<std::size_t>(line.size() + 1, 24), ' ');
        line += f4;
    }
    if (!f5.empty()) {
        line.resize(std::max<std::size_t>(line.size() + 1, 39), ' ');
        line += f5;
        line.resize(std::max<std::size_t>(line.size() + 1, 49), ' ');
        line += f6;
    }
    os << line << '\n';
}

}  // namespace detail

/// Fixed-format MPS export. Columns appear in variable order; maximization is
/// encoded with an OBJSENSE MAX section.
inline std::string write_mps(const LinearProgram& lp_in, const std::string& name = "OTDET") {
    LinearProgram lp = lp_in;
    lp.canonicalize();
    const auto rows = detail::mps_names(lp.row_names(), 'R');
    const auto cols = detail::mps_names(lp.var_names(), 'C');
    std::ostringstream os;
    os << "NAME          " << name << '\n';
    if (lp.sense() == Sense::maximize) os << "OBJSENSE\n    MAX\n";
    os << "ROWS\n";
    detail::mps_line(os, "N", "OBJ", {}, {});
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        const char* t = lp.relations()[i] == Relation::less_equal ? "L"
                        : lp.relations()[i] == Relation::greater_equal ? "G" : "E";
        detail::mps_line(os, t, rows[i], {}, {});
    }
    os << "COLUMNS\n";
    const auto& trip = lp.triplets();
    std::size_t k = 0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        std::vector<std::pair<std::string, double>> entries;
        if (lp.costs()[j] != 0.0 || k >= trip.size() || trip[k].col != j) entries.emplace_back("OBJ", lp.costs()[j]);
        while (k < trip.size() && trip[k].col == j) {
            entries.emplace_back(rows[trip[k].row], trip[k].value);
            ++k;
        }
        for (std::size_t e = 0; e < entries.size(); e += 2) {
            if (e + 1 < entries.size())
                detail::mps_line(os, "", cols[j], entries[e].first, detail::format_number(entries[e].second),
                                 entries[e + 1].first, detail::format_number(entries[e + 1].second));
            else
                detail::mps_line(os, "", cols[j], entries[e].first, detail::format_number(entries[e].second));
        }
    }
    os << "RHS\n";
    for (std::size_t i = 0; i < lp.num_rows(); ++i)
        if (lp.rhs()[i] != 0.0) detail::mps_line(os, "", "RHS", rows[i], detail::format_number(lp.rhs()[i]));
    os << "BOUNDS\n";
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        const double lo = lp.lower()[j], up = lp.upper()[j];
        if (lo == 0.0 && up == kInf) continue;
        if (lo == up) {
            detail::mps_line(os, "FX", "BND", cols[j], detail::format_number(lo));
            continue;
        }
        if (lo == -kInf && up == kInf) {
            detail::mps_line(os, "FR", "BND", cols[j], {});
            continue;
        }
        if (lo == -kInf) detail::mps_line(os, "MI", "BND", cols[j], {});
        else if (lo != 0.0) detail::mps_line(os, "LO", "BND", cols[j], detail::format_number(lo));
        if (up != kInf) detail::mps_line(os, "UP", "BND", cols[j], detail::format_number(up));
    }
    os << "ENDATA\n";
    return os.str();
}

}  // namespace otdet::lp
