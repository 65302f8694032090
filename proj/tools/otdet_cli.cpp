// otdet command-line front end.
//
// Settings resolve in this order, later entries winning: preset defaults,
// the --config file, then command-line flags.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otdet/otdet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace otdet;

namespace {

constexpr const char* kVersion = "0.1.0";

// Flags shared by every scenario-driven command; each maps onto a config key.
struct ScenarioFlags {
    std::string config_path;
    std::optional<std::string> preset;
    std::optional<std::int64_t> seed;
    std::optional<std::int64_t> horizon;
    std::optional<std::int64_t> n1, n2;
    std::optional<double> eps1, eps2, bandwidth, margin;
    std::optional<std::string> clip;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Scenario configuration file");
        cmd->add_option("--preset", preset, "Scenario preset name");
        cmd->add_option("--seed", seed, "Base seed");
        cmd->add_option("--horizon", horizon, "Trajectory length in steps");
        cmd->add_option("--n1", n1, "Nominal training samples");
        cmd->add_option("--n2", n2, "Attacked training samples");
        cmd->add_option("--eps1", eps1, "Nominal ambiguity radius");
        cmd->add_option("--eps2", eps2, "Attacked ambiguity radius");
        cmd->add_option("--bandwidth", bandwidth, "Kernel bandwidth");
        cmd->add_option("--clip", clip, "Score clip bound, or 'none'");
        cmd->add_option("--margin", margin, "Drift margin");
    }

    Config resolve() const {
        Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
        auto num = [](auto v) {
            std::ostringstream os;
            os.precision(17);
            os << v;
            return os.str();
        };
        if (preset) cfg.set("scenario.preset", *preset);
        if (seed) cfg.set("scenario.seed", num(*seed));
        if (horizon) cfg.set("scenario.horizon", num(*horizon));
        if (n1) cfg.set("training.n1", num(*n1));
        if (n2) cfg.set("training.n2", num(*n2));
        if (eps1) cfg.set("training.eps1", num(*eps1));
        if (eps2) cfg.set("training.eps2", num(*eps2));
        if (bandwidth) cfg.set("training.bandwidth", num(*bandwidth));
        if (margin) cfg.set("training.margin", num(*margin));
        if (clip) cfg.set("training.clip", *clip);
        return cfg;
    }

    Scenario scenario() const { return scenario_from_config(resolve()); }
};

fs::path output_dir(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("OTDET_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

fs::path output_path(const std::string& out, const std::string& dir_flag, const std::string& default_name) {
    if (!out.empty()) return out;
    return output_dir(dir_flag) / default_name;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    }
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
    return os;
}

void finish(std::ofstream& os, const fs::path& p) {
    os.flush();
    if (!os) throw IoError("write to '" + p.string() + "' failed");
}

std::ifstream open_in(const std::string& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot open '" + p + "'");
    return is;
}

json metadata(const std::string& command, std::uint64_t seed, const json& effective) {
    return {{"command", command},
            {"seed", seed},
            {"config_digest", hex64(fnv1a64(effective.dump()))},
            {"version", kVersion}};
}

void write_json(const fs::path& p, const json& j) {
    auto os = open_out(p);
    os << j.dump(2) << '\n';
    finish(os, p);
}

void write_sidecar(const fs::path& csv_path, const json& meta) { write_json(csv_path.string() + ".meta.json", meta); }

TrainingSet read_training(const std::string& nominal, const std::string& attacked) {
    TrainingSet ts;
    auto a = open_in(nominal);
    ts.nominal = read_residual_csv(a, nominal).samples;
    auto b = open_in(attacked);
    ts.attacked = read_residual_csv(b, attacked).samples;
    return ts;
}

// ---------------------------------------------------------------------------

struct SimulateCmd {
    ScenarioFlags sf;
    std::string regime = "attacked";
    std::string out, out_dir;

    void attach(CLI::App* cmd) {
        sf.attach(cmd);
        cmd->add_option("--regime", regime, "nominal or attacked")->check(CLI::IsMember({"nominal", "attacked"}));
        cmd->add_option("-o,--out", out, "Residual CSV path");
        cmd->add_option("--out-dir", out_dir, "Output directory");
    }

    int run() const {
        const auto sc = sf.scenario();
        Rng rng(sc.seed, 0, StreamRole::simulation);
        const auto stream = regime == "nominal"
                                ? simulate_nominal(sc.system, sc.observer, sc.nominal_noise, sc.horizon, rng)
                                : simulate_attacked(sc.system, sc.observer, sc.nominal_noise, sc.attack, sc.horizon, rng);
        const auto path = output_path(out, out_dir, "residuals.csv");
        auto os = open_out(path);
        write_residual_csv(os, stream);
        finish(os, path);
        json eff = {{"scenario", scenario_to_json(sc)}, {"regime", regime}};
        write_sidecar(path, metadata("simulate", sc.seed, eff));
        std::cout << "simulate: " << stream.size() << " residuals (" << regime << ", seed " << sc.seed << ") -> "
                  << path.string() << '\n';
        return 0;
    }
};

struct TrainCmd {
    ScenarioFlags sf;
    std::string nominal, attacked;
    std::string out, out_dir;

    void attach(CLI::App* cmd) {
        sf.attach(cmd);
        cmd->add_option("--nominal", nominal, "Nominal training residual CSV");
        cmd->add_option("--attacked", attacked, "Attacked training residual CSV");
        cmd->add_option("-o,--out", out, "Model JSON path");
        cmd->add_option("--out-dir", out_dir, "Output directory");
    }

    int run() const {
        if (nominal.empty() != attacked.empty())
            throw ConfigError("--nominal and --attacked must be given together");
        const auto sc = sf.scenario();
        const auto ts = nominal.empty() ? generate_training_set(sc) : read_training(nominal, attacked);
        const auto tm = train_scenario(sc, ts);
        json eff = {{"scenario", scenario_to_json(sc)}};
        if (!nominal.empty()) eff["training_files"] = {nominal, attacked};
        json art = wcd_to_json(tm.problem, tm.wcd, sc.training.bandwidth);
        art["score_model"] = score_model_to_json(tm.score);
        art["baseline"] = {{"sigma0", json_io::to_json(tm.sigma0)}, {"sigma1", json_io::to_json(tm.sigma1)}};
        art["metadata"] = metadata("train", sc.seed, eff);
        const auto path = output_path(out, out_dir, "model.json");
        write_json(path, art);
        std::cout << "V* = " << csv::format_double(tm.wcd.v_star) << "\n"
                  << "tv* = " << csv::format_double(tm.wcd.tv_star) << "\n"
                  << "risk = " << csv::format_double(tm.wcd.minmax_risk) << "\n"
                  << "drift_offset = " << csv::format_double(tm.score.drift_offset) << "\n"
                  << "model -> " << path.string() << '\n';
        return 0;
    }
};

struct DetectCmd {
    std::string model_path, input;
    std::optional<double> h, eta, sigma_i;
    std::optional<std::int64_t> horizon;
    std::string out, summary, out_dir;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", model_path, "Model JSON from train")->required();
        cmd->add_option("--input", input, "Residual CSV")->required();
        auto* hopt = cmd->add_option("--threshold", h, "Fixed threshold h");
        auto* eopt = cmd->add_option("--eta", eta, "Tail-bound level in (0, 1]");
        hopt->excludes(eopt);
        cmd->add_option("--horizon", horizon, "Horizon for eta calibration (default: stream length)");
        cmd->add_option("--sigma-i", sigma_i, "Sub-Gaussian constant for unclipped models");
        cmd->add_option("-o,--out", out, "Detection CSV path");
        cmd->add_option("--summary", summary, "Summary JSON path");
        cmd->add_option("--out-dir", out_dir, "Output directory");
    }

    int run() const {
        if (!h && !eta) throw ConfigError("detect needs --threshold or --eta");
        auto mis = open_in(model_path);
        json mj;
        try {
            mj = json::parse(mis);
        } catch (const json::exception& e) {
            throw IoError(model_path + ": " + e.what());
        }
        const auto model = score_model_from_json(mj);
        auto ris = open_in(input);
        const auto stream = read_residual_csv(ris, input);
        if (stream.size() > 0 && stream.dim() != model.dim())
            throw ConfigError("residual dimension " + std::to_string(stream.dim()) + " does not match model dimension " +
                              std::to_string(model.dim()));
        if (horizon && *horizon < 1) throw ConfigError("--horizon must be positive");
        const std::size_t T = horizon ? static_cast<std::size_t>(*horizon) : std::max<std::size_t>(stream.size(), 1);
        const auto policy = h ? ThresholdPolicy::fixed(*h) : ThresholdPolicy::tail(*eta, T);
        RunOptions opt;
        opt.sigma_i = sigma_i;
        const auto run = run_detector(model, stream, policy, opt);

        std::uint64_t seed = 0;
        if (mj.contains("metadata") && mj["metadata"].contains("seed")) seed = mj["metadata"]["seed"].get<std::uint64_t>();
        json eff = {{"model", mj}, {"input", input}, {"h", h ? json(*h) : json(nullptr)},
                    {"eta", eta ? json(*eta) : json(nullptr)}, {"horizon", T},
                    {"sigma_i", sigma_i ? json(*sigma_i) : json(nullptr)}};
        const auto meta = metadata("detect", seed, eff);
        const auto csv_path = output_path(out, out_dir, "detection.csv");
        auto os = open_out(csv_path);
        write_detection_csv(os, run);
        finish(os, csv_path);
        write_sidecar(csv_path, meta);
        auto js = detection_summary(run);
        js["metadata"] = meta;
        const auto sum_path = summary.empty() ? fs::path(csv_path.string() + ".summary.json") : fs::path(summary);
        write_json(sum_path, js);

        if (eta) std::cout << "calibrated h = " << csv::format_double(run.h) << " (eta " << csv::format_double(*eta)
                           << ", V_t " << csv::format_double(static_cast<double>(T) * std::pow(increment_sigma(model, opt), 2)) << ")\n";
        std::cout << "tau_det = " << (run.tau_det ? std::to_string(*run.tau_det) : "null") << "\n"
                  << "detection -> " << csv_path.string() << "\n";
        return 0;
    }
};

struct BenchCmd {
    ScenarioFlags sf;
    std::int64_t trials = 200;
    std::string h_grid = "auto";
    std::string detector = "both";
    unsigned threads = 0;
    std::string out_dir;

    void attach(CLI::App* cmd) {
        sf.attach(cmd);
        cmd->add_option("--trials", trials, "Monte Carlo trials per detector");
        cmd->add_option("--h-grid", h_grid, "'auto' or comma-separated ascending thresholds");
        cmd->add_option("--detector", detector, "both, ot-only or baseline-only")
            ->check(CLI::IsMember({"both", "ot-only", "baseline-only"}));
        cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
        cmd->add_option("--out-dir", out_dir, "Output directory");
    }

    std::vector<double> grid(const Scenario& sc) const {
        if (h_grid == "auto") return auto_h_grid(sc);
        std::vector<double> g;
        for (const auto& cell : csv::split(h_grid)) {
            try {
                g.push_back(csv::parse_double(cell, "--h-grid", 1));
            } catch (const IoError&) {
                throw ConfigError("--h-grid: not a number: '" + cell + "'");
            }
        }
        return g;
    }

    int run() const {
        if (trials < 1) throw ConfigError("--trials must be at least 1");
        const auto sc = sf.scenario();
        const auto hs = grid(sc);
        const auto t0 = std::chrono::steady_clock::now();
        const auto tm = train_scenario(sc);
        std::vector<Detector> dets;
        std::vector<std::string> warnings;
        if (detector != "baseline-only") dets.push_back(ot_detector(tm.score));
        if (detector != "ot-only") dets.push_back(baseline_gaussian_cusum(tm.sigma0, tm.sigma1, &warnings));
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

        json eff = {{"scenario", scenario_to_json(sc)}, {"h_grid", hs}, {"trials", trials}, {"detector", detector}};
        const auto meta = metadata("bench", sc.seed, eff);
        const auto dir = output_dir(out_dir);
        for (const auto& det : dets) {
            auto rep = add_far_curve(sc, det, hs, static_cast<std::size_t>(trials), threads);
            rep.scenario_digest = scenario_digest(sc);
            rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const auto csv_path = dir / ("bench_" + det.id + ".csv");
            auto os = open_out(csv_path);
            write_report_csv(os, rep);
            finish(os, csv_path);
            write_sidecar(csv_path, meta);
            auto js = report_to_json(rep);
            js["metadata"]["config_digest"] = meta["config_digest"];
            js["metadata"]["command"] = "bench";
            write_json(dir / ("bench_" + det.id + ".json"), js);
            std::cout << "bench " << det.id << ": " << rep.rows.size() << " thresholds x " << trials << " trials -> "
                      << csv_path.string() << '\n';
        }
        return 0;
    }
};

struct ExportMpsCmd {
    ScenarioFlags sf;
    std::string nominal, attacked;
    std::string out, out_dir;

    void attach(CLI::App* cmd) {
        sf.attach(cmd);
        cmd->add_option("--nominal", nominal, "Nominal training residual CSV");
        cmd->add_option("--attacked", attacked, "Attacked training residual CSV");
        cmd->add_option("-o,--out", out, "MPS path");
        cmd->add_option("--out-dir", out_dir, "Output directory");
    }

    int run() const {
        if (nominal.empty() != attacked.empty())
            throw ConfigError("--nominal and --attacked must be given together");
        const auto sc = sf.scenario();
        const auto ts = nominal.empty() ? generate_training_set(sc) : read_training(nominal, attacked);
        const auto prob = make_problem(ts, sc.training.eps1, sc.training.eps2);
        const auto lp = build_lp(prob);
        const auto path = output_path(out, out_dir, "wcd.mps");
        auto os = open_out(path);
        os << write_mps(lp);
        finish(os, path);
        json eff = {{"scenario", scenario_to_json(sc)}};
        if (!nominal.empty()) eff["training_files"] = {nominal, attacked};
        write_sidecar(path, metadata("export-mps", sc.seed, eff));
        std::cout << "export-mps: " << lp.num_vars() << " variables, " << lp.num_rows() << " rows -> "
                  << path.string() << '\n';
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal-transport attack detection for LTI systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SimulateCmd simulate;
    TrainCmd train;
    DetectCmd detect;
    BenchCmd bench;
    ExportMpsCmd export_mps;
    auto* c_sim = app.add_subcommand("simulate", "Write a residual stream CSV");
    auto* c_train = app.add_subcommand("train", "Solve for worst-case distributions and write a model");
    auto* c_detect = app.add_subcommand("detect", "Run the CUSUM detector on a residual CSV");
    auto* c_bench = app.add_subcommand("bench", "Monte Carlo ADD/FAR curves");
    auto* c_mps = app.add_subcommand("export-mps", "Write the worst-case LP in MPS format");
    simulate.attach(c_sim);
    train.attach(c_train);
    detect.attach(c_detect);
    bench.attach(c_bench);
    export_mps.attach(c_mps);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_sim->parsed()) return simulate.run();
        if (c_train->parsed()) return train.run();
        if (c_detect->parsed()) return detect.run();
        if (c_bench->parsed()) return bench.run();
        if (c_mps->parsed()) return export_mps.run();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
