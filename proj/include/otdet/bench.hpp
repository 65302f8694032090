#pragma once

// Monte Carlo harness: quadruple-tank scenarios, training of the OT score
// model and the Gaussian CUSUM baseline, and ADD/FAR curves over a threshold
// grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "otdet/config.hpp"
#include "otdet/csv.hpp"
#include "otdet/detector.hpp"
#include "otdet/error.hpp"
#include "otdet/lin_sys.hpp"
#include "otdet/rng.hpp"
#include "otdet/wcd.hpp"

namespace otdet {

struct TrainingParams {
    std::size_t n1 = 150, n2 = 150;
    double eps1 = 0.001, eps2 = 0.001;
    double bandwidth = 0.5;
    std::optional<double> clip = 2.0;
    double margin = 0.0;
    std::size_t burn_in = 200;
    std::size_t drift_samples = 1000;
    AttackModel surrogate;  // attack used to generate the attacked training set
};

struct Scenario {
    std::string name;
    SystemModel system;
    ObserverGain observer;
    NoiseModel nominal_noise;
    AttackModel attack;
    TrainingParams training;
    std::size_t horizon = 500;
    std::uint64_t seed = 2;

    void validate() const {
        system.validate();
        const auto dy = system.output_dim();
        if (observer.L.rows() != system.state_dim() || observer.L.cols() != dy)
            throw ConfigError("observer gain must be d_x x d_y");
        if (nominal_noise.dim() != system.noise_dim()) throw ConfigError("process noise must have dimension d_w");
        attack.validate(dy);
        training.surrogate.validate(dy);
        if (horizon == 0) throw ConfigError("horizon must be positive");
        if (attack.t_attack >= horizon) throw ConfigError("attack time must lie before the horizon");
        if (training.n1 < 1 || training.n2 < 1) throw ConfigError("training sizes must be at least 1");
        if (!(training.eps1 > 0.0) || !(training.eps2 > 0.0)) throw ConfigError("radii must be positive");
        if (!(training.bandwidth > 0.0)) throw ConfigError("bandwidth must be positive");
        if (training.clip && !(*training.clip > 0.0)) throw ConfigError("clip bound must be positive");
        if (!(training.margin >= 0.0)) throw ConfigError("drift margin must be nonnegative");
        if (training.drift_samples < 1) throw ConfigError("drift sample count must be positive");
    }
};

// ---------------------------------------------------------------------------
// Quadruple tank

struct QtankVariant {
    enum class Kind { gaussian, gaussian_exp };
    Kind kind = Kind::gaussian;
    double value = 1.5;  // sigma_a for gaussian, lambda for gaussian_exp
};

inline SystemModel quadruple_tank_system() {
    SystemModel m;
    m.A.resize(4, 4);
    m.A << 0.968, 0, 0.082, 0,
           0, 0.978, 0, 0.064,
           0, 0, 0.917, 0,
           0, 0, 0, 0.935;
    m.B.resize(4, 2);
    m.B << 0.164, 0.004,
           0.002, 0.124,
           0, 0.092,
           0.06, 0;
    m.C = Eigen::MatrixXd::Identity(4, 4);
    // w = (process part, measurement part)
    m.E = Eigen::MatrixXd::Zero(4, 8);
    m.E.leftCols(4).setIdentity();
    m.F = Eigen::MatrixXd::Zero(4, 8);
    m.F.rightCols(4).setIdentity();
    m.x0 = Eigen::VectorXd::Zero(4);
    m.xhat0 = Eigen::VectorXd::Zero(4);
    return m;
}

inline NoiseModel quadruple_tank_noise() {
    Eigen::VectorXd diag(8);
    diag << 0.1, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05;
    return NoiseModel::gaussian(diag.asDiagonal().toDenseMatrix());
}

/// Kalman predictor gain for noise entering through E and F. A tiny jitter
/// keeps the innovation covariance invertible when F w is degenerate.
inline ObserverGain default_observer(const SystemModel& sys, const NoiseModel& noise) {
    if (noise.dim() != sys.noise_dim()) throw ConfigError("process noise must have dimension d_w");
    const Eigen::MatrixXd Qw = sys.E * noise.cov() * sys.E.transpose();
    const Eigen::MatrixXd Rv = sys.F * noise.cov() * sys.F.transpose() +
                               1e-9 * Eigen::MatrixXd::Identity(sys.output_dim(), sys.output_dim());
    return steady_state_gain(sys, Qw, Rv);
}

inline AttackModel qtank_attack(const QtankVariant& v, std::size_t t_attack) {
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    AttackModel a;
    a.Aa = 0.5 * I;
    a.t_attack = t_attack;
    a.noise = v.kind == QtankVariant::Kind::gaussian ? NoiseModel::gaussian(v.value * I)
                                                     : NoiseModel::gaussian_plus_exp(0.05 * I, v.value);
    return a;
}

inline std::string to_string(const QtankVariant& v) {
    const std::string kind = v.kind == QtankVariant::Kind::gaussian ? "gauss" : "gexp";
    return "qtank-" + kind + "-" + csv::format_double(v.value);
}

inline Scenario quadruple_tank_scenario(const QtankVariant& v, bool allow_custom = false) {
    const bool gauss = v.kind == QtankVariant::Kind::gaussian;
    const std::vector<double> paper = gauss ? std::vector<double>{0.5, 1.5, 2.5} : std::vector<double>{0.5, 1.5};
    if (!(v.value > 0.0) || !std::isfinite(v.value))
        throw ConfigError("quadruple tank variant parameter must be positive");
    if (!allow_custom && std::find(paper.begin(), paper.end(), v.value) == paper.end())
        throw ConfigError("variant " + to_string(v) + " is not a preset; enable custom variants to use it");
    Scenario sc;
    sc.name = to_string(v);
    sc.system = quadruple_tank_system();
    sc.nominal_noise = quadruple_tank_noise();
    sc.observer = default_observer(sc.system, sc.nominal_noise);
    sc.horizon = 500;
    sc.seed = 2;
    sc.attack = qtank_attack(v, 250);
    sc.training.n1 = 150;
    sc.training.n2 = 150;
    sc.training.eps1 = 0.001;
    sc.training.eps2 = gauss ? 0.001 : 0.01;
    sc.training.bandwidth = 0.5;
    sc.training.surrogate = sc.attack;
    return sc;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"qtank-gauss-0.5", "qtank-gauss-1.5", "qtank-gauss-2.5",
                                                   "qtank-gexp-0.5", "qtank-gexp-1.5"};
    return names;
}

inline Scenario scenario_from_preset(const std::string& name) {
    const auto& names = preset_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        std::string list;
        for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "'; available presets: " + list);
    }
    QtankVariant v;
    v.kind = name.rfind("qtank-gauss-", 0) == 0 ? QtankVariant::Kind::gaussian : QtankVariant::Kind::gaussian_exp;
    v.value = std::stod(name.substr(name.rfind('-') + 1));
    return quadruple_tank_scenario(v);
}

// ---------------------------------------------------------------------------
// Scenario configuration

namespace detail {

inline NoiseModel attack_noise_from(const Config& cfg, const std::string& section, const NoiseModel& fallback) {
    const auto kind = cfg.maybe_string(section + ".kind");
    const bool has_cov = cfg.has(section + ".cov");
    if (!kind && !has_cov && !cfg.has(section + ".rate")) return fallback;
    const Eigen::MatrixXd cov = has_cov ? cfg.get_matrix(section + ".cov") : fallback.cov();
    const std::string k = kind.value_or(fallback.kind() == NoiseModel::Kind::gaussian ? "gaussian" : "gaussian_exp");
    if (k == "gaussian") return NoiseModel::gaussian(cov);
    if (k == "gaussian_exp") {
        const double rate = cfg.maybe_double(section + ".rate").value_or(fallback.rate());
        return NoiseModel::gaussian_plus_exp(cov, rate);
    }
    throw ConfigError(cfg.source() + ": " + section + ".kind must be 'gaussian' or 'gaussian_exp'");
}

inline std::size_t nonneg(const Config& cfg, const std::string& key, std::size_t fallback) {
    const auto v = cfg.maybe_int(key);
    if (!v) return fallback;
    if (*v < 0) throw ConfigError(cfg.source() + ": " + key + " must be nonnegative");
    return static_cast<std::size_t>(*v);
}

}  // namespace detail

/// Builds a scenario from a preset (`scenario.preset`, default
/// qtank-gauss-1.5) and applies every key present in the file on top of it.
/// The observer gain is recomputed when the plant or noise changes unless
/// `observer.L` is given.
inline Scenario scenario_from_config(const Config& cfg) {
    Scenario sc = scenario_from_preset(cfg.maybe_string("scenario.preset").value_or("qtank-gauss-1.5"));
    if (const auto name = cfg.maybe_string("scenario.name")) sc.name = *name;
    sc.horizon = detail::nonneg(cfg, "scenario.horizon", sc.horizon);
    if (const auto s = cfg.maybe_int("scenario.seed")) sc.seed = static_cast<std::uint64_t>(*s);

    bool plant_changed = false;
    for (const char* key : {"A", "B", "C", "E", "F"}) {
        const std::string full = std::string("system.") + key;
        if (!cfg.has(full)) continue;
        plant_changed = true;
        Eigen::MatrixXd m = cfg.get_matrix(full);
        switch (key[0]) {
            case 'A': sc.system.A = m; break;
            case 'B': sc.system.B = m; break;
            case 'C': sc.system.C = m; break;
            case 'E': sc.system.E = m; break;
            default: sc.system.F = m; break;
        }
    }
    if (plant_changed) {
        sc.system.x0 = Eigen::VectorXd::Zero(sc.system.state_dim());
        sc.system.xhat0 = Eigen::VectorXd::Zero(sc.system.state_dim());
    }
    if (cfg.has("system.x0")) sc.system.x0 = cfg.get_vector("system.x0");
    if (cfg.has("system.xhat0")) sc.system.xhat0 = cfg.get_vector("system.xhat0");
    if (cfg.has("noise.cov")) {
        sc.nominal_noise = NoiseModel::gaussian(cfg.get_matrix("noise.cov"));
        plant_changed = true;
    }
    try {
        sc.system.validate();
    } catch (const Error& e) {
        throw ConfigError(cfg.source() + ": " + e.what());
    }
    if (cfg.has("observer.L")) sc.observer.L = cfg.get_matrix("observer.L");
    else if (plant_changed) sc.observer = default_observer(sc.system, sc.nominal_noise);

    const bool surrogate_follows = !cfg.has("surrogate.Aa") && !cfg.has("surrogate.kind") &&
                                   !cfg.has("surrogate.cov") && !cfg.has("surrogate.rate");
    if (cfg.has("attack.Aa")) sc.attack.Aa = cfg.get_matrix("attack.Aa");
    sc.attack.noise = detail::attack_noise_from(cfg, "attack", sc.attack.noise);
    sc.attack.t_attack = detail::nonneg(cfg, "attack.t_attack", sc.attack.t_attack);
    if (surrogate_follows) {
        sc.training.surrogate = sc.attack;
    } else {
        if (cfg.has("surrogate.Aa")) sc.training.surrogate.Aa = cfg.get_matrix("surrogate.Aa");
        sc.training.surrogate.noise = detail::attack_noise_from(cfg, "surrogate", sc.training.surrogate.noise);
    }

    auto& tr = sc.training;
    tr.n1 = detail::nonneg(cfg, "training.n1", tr.n1);
    tr.n2 = detail::nonneg(cfg, "training.n2", tr.n2);
    tr.eps1 = cfg.maybe_double("training.eps1").value_or(tr.eps1);
    tr.eps2 = cfg.maybe_double("training.eps2").value_or(tr.eps2);
    tr.bandwidth = cfg.maybe_double("training.bandwidth").value_or(tr.bandwidth);
    if (const auto c = cfg.maybe_string("training.clip")) {
        if (*c == "none") tr.clip.reset();
        else tr.clip = cfg.get_double("training.clip");
    }
    tr.margin = cfg.maybe_double("training.margin").value_or(tr.margin);
    tr.burn_in = detail::nonneg(cfg, "training.burn_in", tr.burn_in);
    tr.drift_samples = detail::nonneg(cfg, "training.drift_samples", tr.drift_samples);
    try {
        sc.validate();
    } catch (const Error& e) {
        throw ConfigError(cfg.source() + ": " + e.what());
    }
    return sc;
}

// ---------------------------------------------------------------------------
// Training

/// Mean-subtracted sample covariance (divisor n - 1; zero for one sample).
inline Eigen::MatrixXd sample_covariance(const std::vector<Point>& xs) {
    if (xs.empty()) throw ValidationError("sample_covariance: empty sample");
    const auto d = xs.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
    if (xs.size() > 1) cov /= static_cast<double>(xs.size() - 1);
    return cov;
}

/// n1 nominal residuals and n2 residuals under the surrogate attack, both
/// taken after the burn-in.
inline TrainingSet generate_training_set(const Scenario& sc) {
    const auto& tr = sc.training;
    TrainingSet ts;
    Rng rng_nom(sc.seed, 0, StreamRole::training_nominal);
    auto nom = simulate_nominal(sc.system, sc.observer, sc.nominal_noise, tr.burn_in + tr.n1, rng_nom);
    ts.nominal.assign(nom.samples.begin() + static_cast<std::ptrdiff_t>(tr.burn_in), nom.samples.end());

    AttackModel surrogate = tr.surrogate;
    surrogate.t_attack = tr.burn_in;
    Rng rng_att(sc.seed, 0, StreamRole::training_attacked);
    auto att = simulate_attacked(sc.system, sc.observer, sc.nominal_noise, surrogate, tr.burn_in + tr.n2, rng_att);
    ts.attacked.assign(att.samples.begin() + static_cast<std::ptrdiff_t>(tr.burn_in), att.samples.end());
    return ts;
}

struct TrainedModel {
    TrainingSet training;
    WcdProblem problem;
    WcdSolution wcd;
    ScoreModel score;
    Eigen::MatrixXd sigma0, sigma1;  // baseline covariances
};

/// Solves the worst-case problem on the training set, builds the score model
/// and fits its drift offset on fresh nominal residuals.
inline TrainedModel train_scenario(const Scenario& sc, const TrainingSet& ts) {
    sc.validate();
    const auto& tr = sc.training;
    TrainedModel out;
    out.training = ts;
    out.problem = make_problem(ts, tr.eps1, tr.eps2);
    out.wcd = solve_wcd(out.problem);
    out.score = make_score_model(out.problem, out.wcd, tr.bandwidth, tr.clip, 0.0);

    Rng rng_fit(sc.seed, 0, StreamRole::drift_fit);
    const auto fit = simulate_nominal(sc.system, sc.observer, sc.nominal_noise, tr.burn_in + tr.drift_samples, rng_fit);
    std::vector<double> scores;
    scores.reserve(tr.drift_samples);
    for (std::size_t t = tr.burn_in; t < fit.size(); ++t) scores.push_back(score(out.score, fit.samples[t]));
    out.score.drift_offset = fit_drift_offset(scores, tr.margin);

    out.sigma0 = sample_covariance(ts.nominal);
    out.sigma1 = sample_covariance(ts.attacked);
    return out;
}

inline TrainedModel train_scenario(const Scenario& sc) { return train_scenario(sc, generate_training_set(sc)); }

// ---------------------------------------------------------------------------
// Detectors

/// Exact Gaussian log-likelihood ratio between zero-mean N(0, Sigma1) and
/// N(0, Sigma0). Singular covariances get a 1e-6 ridge and a warning.
class GaussianLlr {
public:
    GaussianLlr(Eigen::MatrixXd sigma0, Eigen::MatrixXd sigma1) {
        if (sigma0.rows() != sigma0.cols() || sigma1.rows() != sigma1.cols() || sigma0.rows() != sigma1.rows())
            throw DimensionError("baseline covariances must be square with equal dimension");
        inv0_ = factor(std::move(sigma0), "Sigma0", logdet0_);
        inv1_ = factor(std::move(sigma1), "Sigma1", logdet1_);
    }

    double operator()(const Eigen::VectorXd& z) const {
        if (z.size() != inv0_.rows()) throw DimensionError("baseline: residual dimension mismatch");
        return 0.5 * (z.dot(inv0_ * z) - z.dot(inv1_ * z) + logdet0_ - logdet1_);
    }

    Eigen::Index dim() const { return inv0_.rows(); }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    Eigen::MatrixXd factor(Eigen::MatrixXd S, const char* name, double& logdet) {
        const auto d = S.rows();
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues();
        const bool singular = llt.info() != Eigen::Success || d == 0 || ev.minCoeff() <= 1e-12 * std::max(1.0, ev.maxCoeff());
        if (singular) {
            warnings_.push_back(std::string(name) + " is singular; adding 1e-6 ridge");
            S += 1e-6 * Eigen::MatrixXd::Identity(d, d);
            llt.compute(S);
            if (llt.info() != Eigen::Success) throw NumericalError(std::string("baseline: ") + name + " is not positive semidefinite");
        }
        logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        return llt.solve(Eigen::MatrixXd::Identity(d, d));
    }

    Eigen::MatrixXd inv0_, inv1_;
    double logdet0_ = 0.0, logdet1_ = 0.0;
    std::vector<std::string> warnings_;
};

/// A CUSUM increment function with an optional sub-Gaussian constant, used to
/// report the tail-bound level of each threshold.
struct Detector {
    std::string id;
    std::function<double(const Eigen::VectorXd&)> increment;
    std::optional<double> sigma_i;
};

inline Detector ot_detector(ScoreModel model) {
    model.validate();
    const auto sigma = model.clip;
    return {"ot", [m = std::move(model)](const Eigen::VectorXd& z) { return score(m, z); }, sigma};
}

inline Detector baseline_gaussian_cusum(const Eigen::MatrixXd& sigma0, const Eigen::MatrixXd& sigma1,
                                        std::vector<std::string>* warnings = nullptr) {
    GaussianLlr llr(sigma0, sigma1);
    if (warnings) warnings->insert(warnings->end(), llr.warnings().begin(), llr.warnings().end());
    return {"baseline", [llr = std::move(llr)](const Eigen::VectorXd& z) { return llr(z); }, std::nullopt};
}

inline std::vector<double> cusum_trajectory(const Detector& det, const ResidualStream& stream) {
    std::vector<double> S;
    S.reserve(stream.size());
    double s = 0.0;
    for (const auto& z : stream.samples) {
        s = std::max(0.0, s + det.increment(z));
        S.push_back(s);
    }
    return S;
}

// ---------------------------------------------------------------------------
// Trials and curves

/// tau_det is the residual index whose score first pushed S to h.
struct TrialResult {
    std::optional<std::size_t> tau_det;
    bool false_alarm = false;
    std::optional<std::size_t> delay;
};

inline TrialResult classify(std::optional<std::size_t> crossing_step, std::size_t t_attack) {
    TrialResult r;
    if (!crossing_step) return r;
    r.tau_det = *crossing_step - 1;
    if (*r.tau_det < t_attack) r.false_alarm = true;
    else r.delay = *r.tau_det - t_attack;
    return r;
}

inline std::uint64_t trial_seed(const Scenario& sc, std::size_t index) {
    return derive_seed(sc.seed, index, StreamRole::trial);
}

inline ResidualStream simulate_trial(const Scenario& sc, std::uint64_t seed) {
    Rng rng(seed);
    return simulate_attacked(sc.system, sc.observer, sc.nominal_noise, sc.attack, sc.horizon, rng);
}

inline TrialResult run_trial(const Scenario& sc, const Detector& det, double h, std::uint64_t seed) {
    if (!(h > 0.0)) throw ValidationError("run_trial: h must be positive");
    const auto S = cusum_trajectory(det, simulate_trial(sc, seed));
    return classify(first_crossing(S, h), sc.attack.t_attack);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
/// concurrency). Workers take contiguous index blocks.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t block = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * block; i < std::min(n, (w + 1) * block); ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct BenchRow {
    std::string detector;
    double h = 0.0;
    std::optional<double> eta;
    double far = 0.0;
    std::optional<double> add;
    std::size_t n_trials = 0;
    std::size_t n_detected = 0;  // alarms at or after the attack
    std::size_t n_false_alarm = 0;
    std::size_t n_missed = 0;
    double far_se = 0.0;
    std::optional<double> add_se;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string scenario_digest;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
};

inline double horizon_variance(const Scenario& sc) {
    const double c = sc.training.clip.value_or(2.0);
    return static_cast<double>(sc.horizon) * c * c;
}

/// 10 log-spaced thresholds between the tail-bound levels 0.5 and 1e-4 over
/// the full horizon.
inline std::vector<double> auto_h_grid(const Scenario& sc, std::size_t points = 10) {
    const double V = horizon_variance(sc);
    const double lo = calibrate_threshold(0.5, V), hi = calibrate_threshold(1e-4, V);
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        grid[i] = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    }
    return grid;
}

/// FAR and ADD at every threshold. Trial i replays the attacked residual
/// stream seeded by trial_seed(sc, i), so different detectors see common
/// random numbers. Aggregation runs in trial order after the parallel phase.
inline BenchReport add_far_curve(const Scenario& sc, const Detector& det, const std::vector<double>& h_grid,
                                 std::size_t n_trials, unsigned threads = 0) {
    sc.validate();
    if (h_grid.empty()) throw ConfigError("threshold grid is empty");
    for (std::size_t i = 0; i < h_grid.size(); ++i) {
        if (!(h_grid[i] > 0.0) || !std::isfinite(h_grid[i])) throw ConfigError("thresholds must be positive");
        if (i > 0 && !(h_grid[i] > h_grid[i - 1])) throw ConfigError("threshold grid must be strictly ascending");
    }
    if (n_trials < 1) throw ConfigError("n_trials must be at least 1");

    std::vector<std::vector<TrialResult>> results(n_trials);
    parallel_for(
        n_trials,
        [&](std::size_t i) {
            const auto S = cusum_trajectory(det, simulate_trial(sc, trial_seed(sc, i)));
            auto& row = results[i];
            row.reserve(h_grid.size());
            for (double h : h_grid) row.push_back(classify(first_crossing(S, h), sc.attack.t_attack));
        },
        threads);

    BenchReport rep;
    rep.seed = sc.seed;
    for (std::size_t j = 0; j < h_grid.size(); ++j) {
        BenchRow row;
        row.detector = det.id;
        row.h = h_grid[j];
        if (det.sigma_i) row.eta = tail_bound(h_grid[j], static_cast<double>(sc.horizon) * *det.sigma_i * *det.sigma_i);
        row.n_trials = n_trials;
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < n_trials; ++i) {
            const auto& r = results[i][j];
            if (r.false_alarm) ++row.n_false_alarm;
            else if (r.delay) {
                ++row.n_detected;
                const double d = static_cast<double>(*r.delay);
                sum += d;
                sumsq += d * d;
            } else {
                ++row.n_missed;
            }
        }
        const double n = static_cast<double>(n_trials);
        row.far = static_cast<double>(row.n_false_alarm) / n;
        row.far_se = std::sqrt(row.far * (1.0 - row.far) / n);
        if (row.n_detected > 0) {
            const double k = static_cast<double>(row.n_detected);
            const double mean = sum / k;
            row.add = mean;
            const double var = row.n_detected > 1 ? std::max(0.0, (sumsq - k * mean * mean) / (k - 1.0)) : 0.0;
            row.add_se = std::sqrt(var / k);
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Reports

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
}

namespace detail {

inline nlohmann::json noise_to_json(const NoiseModel& n) {
    return {{"kind", n.kind() == NoiseModel::Kind::gaussian ? "gaussian" : "gaussian_exp"},
            {"cov", json_io::to_json(n.cov())},
            {"rate", n.rate()}};
}

inline nlohmann::json attack_to_json(const AttackModel& a) {
    return {{"Aa", json_io::to_json(a.Aa)}, {"noise", noise_to_json(a.noise)}, {"t_attack", a.t_attack}};
}

}  // namespace detail

inline nlohmann::json scenario_to_json(const Scenario& sc) {
    const auto& tr = sc.training;
    return {
        {"name", sc.name},
        {"system",
         {{"A", json_io::to_json(sc.system.A)},
          {"B", json_io::to_json(sc.system.B)},
          {"C", json_io::to_json(sc.system.C)},
          {"E", json_io::to_json(sc.system.E)},
          {"F", json_io::to_json(sc.system.F)},
          {"x0", json_io::to_json(sc.system.x0)},
          {"xhat0", json_io::to_json(sc.system.xhat0)}}},
        {"observer_L", json_io::to_json(sc.observer.L)},
        {"nominal_noise", detail::noise_to_json(sc.nominal_noise)},
        {"attack", detail::attack_to_json(sc.attack)},
        {"training",
         {{"n1", tr.n1},
          {"n2", tr.n2},
          {"eps1", tr.eps1},
          {"eps2", tr.eps2},
          {"bandwidth", tr.bandwidth},
          {"clip", tr.clip ? nlohmann::json(*tr.clip) : nlohmann::json(nullptr)},
          {"margin", tr.margin},
          {"burn_in", tr.burn_in},
          {"drift_samples", tr.drift_samples},
          {"surrogate", detail::attack_to_json(tr.surrogate)}}},
        {"horizon", sc.horizon},
        {"seed", sc.seed},
    };
}

inline std::string scenario_digest(const Scenario& sc) { return hex64(fnv1a64(scenario_to_json(sc).dump())); }

// CSV `detector,h,eta,far,add,n_trials,n_detected`; undefined values are empty.
inline void write_report_csv(std::ostream& os, const BenchReport& rep) {
    os << "detector,h,eta,far,add,n_trials,n_detected\n";
    for (const auto& r : rep.rows) {
        os << r.detector << ',' << csv::format_double(r.h) << ',' << (r.eta ? csv::format_double(*r.eta) : "") << ','
           << csv::format_double(r.far) << ',' << (r.add ? csv::format_double(*r.add) : "") << ',' << r.n_trials << ','
           << r.n_detected << '\n';
    }
}

inline nlohmann::json report_to_json(const BenchReport& rep) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        rows.push_back({{"detector", r.detector},
                        {"h", r.h},
                        {"eta", opt(r.eta)},
                        {"far", r.far},
                        {"far_se", r.far_se},
                        {"add", opt(r.add)},
                        {"add_se", opt(r.add_se)},
                        {"n_trials", r.n_trials},
                        {"n_detected", r.n_detected},
                        {"n_false_alarm", r.n_false_alarm},
                        {"n_missed", r.n_missed}});
    }
    return {{"rows", rows},
            {"metadata", {{"scenario_digest", rep.scenario_digest}, {"seed", rep.seed}, {"wall_time_s", rep.wall_time_s}}}};
}

}  // namespace otdet
