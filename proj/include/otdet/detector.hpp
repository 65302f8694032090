#pragma once

// Kernel-smoothed log-likelihood-ratio score over the worst-case
// distributions, the CUSUM recursion, and threshold calibration from the
// sub-Gaussian tail bound P(S_t >= h) <= 2 exp(-h^2 / (8 V_t)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "otdet/csv.hpp"
#include "otdet/error.hpp"
#include "otdet/lin_sys.hpp"
#include "otdet/ot_core.hpp"
#include "otdet/wcd.hpp"

namespace otdet {

/// Two Gaussian-kernel mixtures on a shared atom set and the clip/drift
/// preprocessing applied to their log ratio.
struct ScoreModel {
    std::vector<Point> atoms;
    Eigen::VectorXd p1, p2;
    double bandwidth = 0.5;
    std::optional<double> clip;
    double drift_offset = 0.0;
    std::optional<std::size_t> knn_truncation;

    Eigen::Index dim() const { return atoms.empty() ? 0 : atoms.front().size(); }

    void validate() const {
        require_uniform_dim(atoms, "ScoreModel");
        const auto n = static_cast<Eigen::Index>(atoms.size());
        if (p1.size() != n || p2.size() != n) throw DimensionError("ScoreModel: weight vectors do not match atoms");
        for (const auto* p : {&p1, &p2}) {
            if (!p->allFinite() || (p->array() < 0.0).any() || std::abs(p->sum() - 1.0) > 1e-9)
                throw ValidationError("ScoreModel: weights must lie on the probability simplex");
        }
        if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw ValidationError("ScoreModel: bandwidth must be positive");
        if (clip && !(*clip > 0.0)) throw ValidationError("ScoreModel: clip bound must be positive");
        if (!std::isfinite(drift_offset) || drift_offset > 0.0)
            throw ValidationError("ScoreModel: drift offset must be finite and nonpositive");
        if (knn_truncation && *knn_truncation == 0) throw ValidationError("ScoreModel: knn truncation must be >= 1");
    }
};

/// Cleans solver output onto the simplex: tiny negatives to zero, then
/// renormalize.
inline Eigen::VectorXd project_weights(const Eigen::VectorXd& w) {
    Eigen::VectorXd out = w.cwiseMax(0.0);
    const double s = out.sum();
    if (!(s > 0.0)) throw ValidationError("project_weights: no positive mass");
    return out / s;
}

inline ScoreModel make_score_model(const WcdProblem& prob, const WcdSolution& sol, double bandwidth,
                                   std::optional<double> clip = std::nullopt, double drift_offset = 0.0) {
    ScoreModel m{prob.pooled.support, project_weights(sol.p1), project_weights(sol.p2), bandwidth, clip, drift_offset, {}};
    m.validate();
    return m;
}

/// log f_k(z), f_k(z) = sum_l p_{k,l} (2 pi s^2)^{-d/2} exp(-|z - s_l|^2 / 2 s^2),
/// evaluated as a log-sum-exp over atoms with positive weight. With knn
/// truncation, only the K nearest positive-weight atoms contribute.
inline double log_density(const ScoreModel& model, int k, const Eigen::VectorXd& z) {
    if (z.size() != model.dim()) throw DimensionError("density: point dimension does not match the model");
    const auto& p = k == 1 ? model.p1 : model.p2;
    const double inv2s2 = 1.0 / (2.0 * model.bandwidth * model.bandwidth);
    const double d = static_cast<double>(z.size());
    const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * model.bandwidth * model.bandwidth);

    thread_local std::vector<double> terms;
    thread_local std::vector<double> dist2;
    terms.clear();
    dist2.clear();
    for (std::size_t l = 0; l < model.atoms.size(); ++l) {
        const double w = p[static_cast<Eigen::Index>(l)];
        if (w <= 0.0) continue;
        const double r2 = (z - model.atoms[l]).squaredNorm();
        terms.push_back(std::log(w) - r2 * inv2s2);
        dist2.push_back(r2);
    }
    if (terms.empty()) throw ValidationError("density: weight vector has no positive entry");
    if (model.knn_truncation && *model.knn_truncation < terms.size()) {
        const std::size_t K = *model.knn_truncation;
        std::vector<std::size_t> idx(terms.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(K - 1), idx.end(),
                         [&](std::size_t a, std::size_t b) { return dist2[a] != dist2[b] ? dist2[a] < dist2[b] : a < b; });
        std::vector<double> kept;
        kept.reserve(K);
        for (std::size_t i = 0; i < K; ++i) kept.push_back(terms[idx[i]]);
        terms.swap(kept);
    }
    const double mx = *std::max_element(terms.begin(), terms.end());
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - mx);
    return log_norm + mx + std::log(acc);
}

inline double density(const ScoreModel& model, int k, const Eigen::VectorXd& z) {
    return std::exp(log_density(model, k, z));
}

/// log f2(z) - log f1(z) before clipping and drift correction.
inline double raw_score(const ScoreModel& model, const Eigen::VectorXd& z) {
    return log_density(model, 2, z) - log_density(model, 1, z);
}

inline double score(const ScoreModel& model, const Eigen::VectorXd& z) {
    double s = raw_score(model, z);
    if (model.clip) s = std::clamp(s, -*model.clip, *model.clip);
    return s + model.drift_offset;
}

struct CusumState {
    double S = 0.0;
    std::size_t t = 0;
    double V = 0.0;  // running sum of sigma_i^2
};

inline CusumState cusum_step(CusumState state, double x, double sigma_i) {
    if (!(sigma_i > 0.0)) throw ValidationError("cusum_step: sigma_i must be positive");
    state.S = std::max(0.0, state.S + x);
    state.t += 1;
    state.V += sigma_i * sigma_i;
    return state;
}

inline double tail_bound(double h, double V_t) {
    if (!(h > 0.0) || !(V_t > 0.0)) throw ValidationError("tail_bound: h and V_t must be positive");
    return std::min(1.0, 2.0 * std::exp(-h * h / (8.0 * V_t)));
}

/// Smallest h with tail_bound(h, V_t) <= eta.
inline double calibrate_threshold(double eta, double V_t) {
    if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("calibrate_threshold: eta must lie in (0, 1)");
    if (!(V_t > 0.0)) throw ValidationError("calibrate_threshold: V_t must be positive");
    return std::sqrt(8.0 * V_t * std::log(2.0 / eta));
}

/// Static offset pushing the empirical nominal score mean to at most -margin.
inline double fit_drift_offset(const std::vector<double>& h0_scores, double margin = 0.0) {
    if (h0_scores.empty()) throw ValidationError("fit_drift_offset: empty score sample");
    if (!(margin >= 0.0)) throw ValidationError("fit_drift_offset: margin must be nonnegative");
    double sum = 0.0;
    for (double s : h0_scores) sum += s;
    const double mean = sum / static_cast<double>(h0_scores.size());
    return std::min(0.0, -(mean + margin));
}

struct ThresholdPolicy {
    enum class Mode { fixed, tail_bound };
    Mode mode = Mode::fixed;
    double h = 0.0;
    double eta = 0.0;
    std::size_t horizon = 0;

    static ThresholdPolicy fixed(double h) {
        if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("threshold h must be positive");
        return {Mode::fixed, h, 0.0, 0};
    }
    static ThresholdPolicy tail(double eta, std::size_t horizon) {
        if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("eta must lie in (0, 1]");
        if (horizon == 0) throw ValidationError("tail-bound horizon must be positive");
        return {Mode::tail_bound, 0.0, eta, horizon};
    }
};

struct DetectionRun {
    std::vector<double> scores;
    std::vector<double> S;
    std::optional<std::size_t> tau_det;  // 1-based CUSUM step of the first alarm
    double h = 0.0;
    std::optional<double> eta;
    double V_t = 0.0;
};

struct RunOptions {
    // Per-step sub-Gaussian constant when the model is unclipped.
    std::optional<double> sigma_i;
};

inline double increment_sigma(const ScoreModel& model, const RunOptions& opt) {
    if (model.clip) return *model.clip;
    if (opt.sigma_i) return *opt.sigma_i;
    return std::numeric_limits<double>::quiet_NaN();
}

/// First CUSUM step at which the trajectory reaches h, if any. Ties count.
inline std::optional<std::size_t> first_crossing(const std::vector<double>& S, double h) {
    for (std::size_t i = 0; i < S.size(); ++i)
        if (S[i] >= h) return i + 1;
    return std::nullopt;
}

inline DetectionRun run_detector(const ScoreModel& model, const ResidualStream& residuals,
                                 const ThresholdPolicy& policy, const RunOptions& opt = {}) {
    model.validate();
    if (residuals.size() > 0 && residuals.dim() != model.dim())
        throw ConfigError("run_detector: residual dimension " + std::to_string(residuals.dim()) +
                          " does not match model dimension " + std::to_string(model.dim()));
    const double sigma = increment_sigma(model, opt);
    const bool have_sigma = std::isfinite(sigma) && sigma > 0.0;
    DetectionRun run;
    if (policy.mode == ThresholdPolicy::Mode::tail_bound) {
        if (!have_sigma)
            throw ConfigError("tail-bound thresholds need a clipped score or a configured sigma_i");
        run.eta = policy.eta;
        const double V = static_cast<double>(policy.horizon) * sigma * sigma;
        // eta = 1 gives the smallest h at which the bound stops being vacuous.
        run.h = policy.eta < 1.0 ? calibrate_threshold(policy.eta, V) : std::sqrt(8.0 * V * std::log(2.0));
    } else {
        run.h = policy.h;
    }
    CusumState st;
    run.scores.reserve(residuals.size());
    run.S.reserve(residuals.size());
    for (const auto& z : residuals.samples) {
        const double x = score(model, z);
        st = cusum_step(st, x, have_sigma ? sigma : 1.0);
        run.scores.push_back(x);
        run.S.push_back(st.S);
        if (!run.tau_det && st.S >= run.h) run.tau_det = st.t;
    }
    run.V_t = have_sigma ? st.V : 0.0;
    return run;
}

// CSV `t,score,S,alarm`; t is the 1-based CUSUM step.
inline void write_detection_csv(std::ostream& os, const DetectionRun& run) {
    os << "t,score,S,alarm\n";
    for (std::size_t i = 0; i < run.S.size(); ++i)
        os << i + 1 << ',' << csv::format_double(run.scores[i]) << ',' << csv::format_double(run.S[i]) << ','
           << (run.S[i] >= run.h ? 1 : 0) << '\n';
}

inline nlohmann::json detection_summary(const DetectionRun& run) {
    nlohmann::json j;
    j["tau_det"] = run.tau_det ? nlohmann::json(*run.tau_det) : nlohmann::json(nullptr);
    j["h"] = run.h;
    j["eta"] = run.eta ? nlohmann::json(*run.eta) : nlohmann::json(nullptr);
    j["V_t"] = run.V_t;
    return j;
}

inline nlohmann::json score_model_to_json(const ScoreModel& m) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : m.atoms) atoms.push_back(json_io::to_json(a));
    return {
        {"atoms", atoms},
        {"p1", json_io::to_json(m.p1)},
        {"p2", json_io::to_json(m.p2)},
        {"bandwidth", m.bandwidth},
        {"clip", m.clip ? nlohmann::json(*m.clip) : nlohmann::json(nullptr)},
        {"drift_offset", m.drift_offset},
        {"knn_truncation", m.knn_truncation ? nlohmann::json(*m.knn_truncation) : nlohmann::json(nullptr)},
    };
}

/// Reads either a bare score-model object or a trained-model artifact whose
/// "score_model" member holds one.
inline ScoreModel score_model_from_json(const nlohmann::json& j_in) {
    const nlohmann::json& j = j_in.contains("score_model") ? j_in.at("score_model") : j_in;
    try {
        ScoreModel m;
        for (const auto& a : j.at("atoms")) m.atoms.push_back(json_io::vector_from(a, "atoms"));
        m.p1 = json_io::vector_from(j.at("p1"), "p1");
        m.p2 = json_io::vector_from(j.at("p2"), "p2");
        m.bandwidth = j.at("bandwidth").get<double>();
        if (j.contains("clip") && !j.at("clip").is_null()) m.clip = j.at("clip").get<double>();
        m.drift_offset = j.value("drift_offset", 0.0);
        if (j.contains("knn_truncation") && !j.at("knn_truncation").is_null())
            m.knn_truncation = j.at("knn_truncation").get<std::size_t>();
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("model artifact: ") + e.what());
    }
}

}  // namespace otdet
