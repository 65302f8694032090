#pragma once

// Discrete-time LTI plant with a steady-state observer, and the output-channel
// deception attack that replaces the measurement fed to the observer.

#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "otdet/csv.hpp"
#include "otdet/error.hpp"
#include "otdet/rng.hpp"

namespace otdet {

inline void require_finite(const Eigen::MatrixXd& m, const char* name) {
    if (!m.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
}

/// x_{t+1} = A x_t + B u_t + E w_t,  y_t = C x_t + F w_t.
struct SystemModel {
    Eigen::MatrixXd A, B, C, E, F;
    Eigen::VectorXd x0, xhat0;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index output_dim() const { return C.rows(); }
    Eigen::Index noise_dim() const { return E.cols(); }

    void validate() const {
        const auto nx = A.rows();
        if (A.cols() != nx) throw DimensionError("A must be square");
        if (B.rows() != nx) throw DimensionError("B must have as many rows as A");
        if (C.cols() != nx) throw DimensionError("C must have as many columns as A");
        if (E.rows() != nx) throw DimensionError("E must have as many rows as A");
        if (F.rows() != C.rows()) throw DimensionError("F must have as many rows as C");
        if (E.cols() != F.cols()) throw DimensionError("E and F must have the same number of columns");
        if (x0.size() != nx || xhat0.size() != nx) throw DimensionError("initial states must have length d_x");
        require_finite(A, "A");
        require_finite(B, "B");
        require_finite(C, "C");
        require_finite(E, "E");
        require_finite(F, "F");
        require_finite(x0, "x0");
        require_finite(xhat0, "xhat0");
    }
};

/// Zero-mean Gaussian noise, optionally shifted by an independent Exp(rate)
/// draw on every coordinate.
class NoiseModel {
public:
    enum class Kind { gaussian, gaussian_plus_exp };

    NoiseModel() = default;  // zero-dimensional placeholder
    static NoiseModel gaussian(Eigen::MatrixXd cov) { return NoiseModel(Kind::gaussian, std::move(cov), 0.0); }
    static NoiseModel gaussian_plus_exp(Eigen::MatrixXd cov, double rate) {
        if (!(rate > 0.0) || !std::isfinite(rate)) throw ValidationError("exponential rate must be positive");
        return NoiseModel(Kind::gaussian_plus_exp, std::move(cov), rate);
    }

    Kind kind() const { return kind_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    double rate() const { return rate_; }
    Eigen::Index dim() const { return cov_.rows(); }
    // factor * factor^T == cov
    const Eigen::MatrixXd& factor() const { return factor_; }

private:
    NoiseModel(Kind kind, Eigen::MatrixXd cov, double rate) : kind_(kind), cov_(std::move(cov)), rate_(rate) {
        if (cov_.rows() != cov_.cols()) throw DimensionError("noise covariance must be square");
        require_finite(cov_, "noise covariance");
        if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + cov_.cwiseAbs().maxCoeff()))
            throw ValidationError("noise covariance must be symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
        const double scale = 1.0 + cov_.cwiseAbs().maxCoeff();
        if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
            throw ValidationError("noise covariance must be positive semidefinite");
        const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        factor_ = eig.eigenvectors() * root.asDiagonal();
    }

    Kind kind_ = Kind::gaussian;
    Eigen::MatrixXd cov_;
    double rate_ = 0.0;
    Eigen::MatrixXd factor_;
};

struct AttackModel {
    enum class Mode { replace_output };

    Eigen::MatrixXd Aa;
    NoiseModel noise;
    std::size_t t_attack = 0;
    Mode mode = Mode::replace_output;

    void validate(Eigen::Index output_dim) const {
        if (Aa.rows() != output_dim || Aa.cols() != output_dim)
            throw DimensionError("attack matrix Aa must be d_y x d_y");
        if (noise.dim() != output_dim) throw DimensionError("attack noise must have dimension d_y");
        require_finite(Aa, "Aa");
    }
};

struct ObserverGain {
    Eigen::MatrixXd L;
};

enum class Regime { nominal, attacked };

inline const char* to_string(Regime r) { return r == Regime::nominal ? "nominal" : "attacked"; }

/// Residuals r_0..r_{T-1}. For attacked streams, samples from attack_onset on
/// are generated under the attack.
struct ResidualStream {
    std::vector<Eigen::VectorXd> samples;
    Regime regime = Regime::nominal;
    std::size_t attack_onset = 0;

    std::size_t size() const { return samples.size(); }
    Eigen::Index dim() const { return samples.empty() ? 0 : samples.front().size(); }
    Regime regime_at(std::size_t t) const {
        return regime == Regime::attacked && t >= attack_onset ? Regime::attacked : Regime::nominal;
    }
};

inline double spectral_radius(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols()) throw DimensionError("spectral_radius: matrix must be square");
    require_finite(M, "spectral_radius input");
    if (M.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigenvalue computation failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Steady-state predictor gain from the discrete Riccati recursion
///   P <- A P A^T - A P C^T (C P C^T + Rv)^{-1} C P A^T + Qw,
/// iterated until successive iterates agree to tol in the sup norm.
inline ObserverGain steady_state_gain(const SystemModel& model, const Eigen::MatrixXd& Qw,
                                      const Eigen::MatrixXd& Rv, double tol = 1e-12,
                                      std::size_t max_iters = 100000) {
    model.validate();
    const auto nx = model.state_dim(), ny = model.output_dim();
    if (Qw.rows() != nx || Qw.cols() != nx) throw DimensionError("Qw must be d_x x d_x");
    if (Rv.rows() != ny || Rv.cols() != ny) throw DimensionError("Rv must be d_y x d_y");
    if (!(tol > 0.0)) throw ValidationError("steady_state_gain: tol must be positive");
    const auto& A = model.A;
    const auto& C = model.C;
    Eigen::MatrixXd P = Qw;
    Eigen::MatrixXd L;
    bool converged = false;
    for (std::size_t it = 0; it < max_iters; ++it) {
        const Eigen::MatrixXd S = C * P * C.transpose() + Rv;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
        if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
            throw NumericalError("steady_state_gain: innovation covariance is singular");
        const Eigen::MatrixXd APCt = A * P * C.transpose();
        L = ldlt.solve(APCt.transpose()).transpose();
        Eigen::MatrixXd next = A * P * A.transpose() - L * APCt.transpose() + Qw;
        next = 0.5 * (next + next.transpose());
        const double diff = (next - P).cwiseAbs().maxCoeff();
        P = std::move(next);
        if (diff <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) throw ConvergenceError("steady_state_gain: Riccati iteration did not converge");
    const Eigen::MatrixXd S = C * P * C.transpose() + Rv;
    L = S.ldlt().solve((A * P * C.transpose()).transpose()).transpose();
    if (spectral_radius(A - L * C) >= 1.0)
        throw ConvergenceError("steady_state_gain: resulting observer is not stable");
    return {L};
}

inline Eigen::VectorXd sample_noise(const NoiseModel& nm, Eigen::Index dim, Rng& rng) {
    if (dim != nm.dim()) throw DimensionError("sample_noise: dimension does not match covariance");
    Eigen::VectorXd z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
    Eigen::VectorXd out = nm.factor() * z;
    if (nm.kind() == NoiseModel::Kind::gaussian_plus_exp)
        for (Eigen::Index i = 0; i < dim; ++i) out[i] += rng.exponential(nm.rate());
    return out;
}

namespace detail {

inline void check_simulation_inputs(const SystemModel& model, const ObserverGain& gain, const NoiseModel& noise,
                                    std::size_t horizon) {
    model.validate();
    if (gain.L.rows() != model.state_dim() || gain.L.cols() != model.output_dim())
        throw DimensionError("observer gain must be d_x x d_y");
    if (noise.dim() != model.noise_dim()) throw DimensionError("process noise must have dimension d_w");
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    if (spectral_radius(model.A - gain.L * model.C) >= 1.0)
        throw ValidationError("observer is unstable: spectral radius of A - L C is not below one");
}

// u_t = 0 throughout; the observer cancels B u_t exactly, so residuals do not
// depend on the input.
inline ResidualStream simulate(const SystemModel& model, const ObserverGain& gain, const NoiseModel& noise,
                               const AttackModel* attack, std::size_t horizon, Rng& rng) {
    check_simulation_inputs(model, gain, noise, horizon);
    if (attack) attack->validate(model.output_dim());
    ResidualStream out;
    out.samples.reserve(horizon);
    out.regime = attack ? Regime::attacked : Regime::nominal;
    out.attack_onset = attack ? attack->t_attack : horizon;

    Eigen::VectorXd x = model.x0, xhat = model.xhat0;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(model.output_dim());
    for (std::size_t t = 0; t < horizon; ++t) {
        const Eigen::VectorXd w = sample_noise(noise, model.noise_dim(), rng);
        Eigen::VectorXd fed = model.C * x + model.F * w;
        if (attack && t >= attack->t_attack) {
            v = attack->Aa * v + sample_noise(attack->noise, model.output_dim(), rng);
            fed = v;
        }
        Eigen::VectorXd r = fed - model.C * xhat;
        xhat = model.A * xhat + gain.L * r;
        x = model.A * x + model.E * w;
        out.samples.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

inline ResidualStream simulate_nominal(const SystemModel& model, const ObserverGain& gain, const NoiseModel& noise,
                                       std::size_t horizon, Rng& rng) {
    return detail::simulate(model, gain, noise, nullptr, horizon, rng);
}

/// Before t_attack identical to simulate_nominal under the same generator
/// state. From t_attack on the observer receives v_t = Aa v_{t-1} + vhat_t
/// with v_{t_attack - 1} = 0.
inline ResidualStream simulate_attacked(const SystemModel& model, const ObserverGain& gain, const NoiseModel& noise,
                                        const AttackModel& attack, std::size_t horizon, Rng& rng) {
    return detail::simulate(model, gain, noise, &attack, horizon, rng);
}

// CSV `t,r1,...,r{d_y},regime`.
inline void write_residual_csv(std::ostream& os, const ResidualStream& stream) {
    os << "t";
    for (Eigen::Index k = 0; k < stream.dim(); ++k) os << ",r" << k + 1;
    os << ",regime\n";
    for (std::size_t t = 0; t < stream.size(); ++t) {
        os << t;
        for (Eigen::Index k = 0; k < stream.dim(); ++k) os << ',' << csv::format_double(stream.samples[t][k]);
        os << ',' << to_string(stream.regime_at(t)) << '\n';
    }
}

inline ResidualStream read_residual_csv(std::istream& is, const std::string& source = "<stream>") {
    const auto table = csv::read_table(is, source);
    const auto& h = table.header;
    if (h.size() < 3 || h.front() != "t" || h.back() != "regime")
        throw IoError(source + ": expected header t,r1,...,regime");
    const std::size_t dim = h.size() - 2;
    ResidualStream out;
    out.attack_onset = table.rows.size();
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const auto line = table.line_numbers[i];
        Eigen::VectorXd r(static_cast<Eigen::Index>(dim));
        for (std::size_t k = 0; k < dim; ++k) r[static_cast<Eigen::Index>(k)] = csv::parse_double(row[k + 1], source, line);
        const auto& tag = row.back();
        if (tag == "attacked") {
            if (out.regime == Regime::nominal) {
                out.regime = Regime::attacked;
                out.attack_onset = i;
            }
        } else if (tag != "nominal") {
            throw IoError(source + ":" + std::to_string(line) + ": unknown regime '" + tag + "'");
        }
        out.samples.push_back(std::move(r));
    }
    return out;
}

}  // namespace otdet
