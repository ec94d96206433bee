// ghostrec command line: simulate, reconstruct, evaluate, reproduce.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <optional>
#include <string>

#include "ghostrec/ghostrec.hpp"

namespace fs = std::filesystem;
using namespace ghostrec;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;

void log(const std::string& msg) { std::cerr << "ghostrec: " << msg << '\n'; }

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void print_metrics(const RunMetrics& m) {
    CsvTable t(metrics_columns());
    t.add_row(metrics_cells(m));
    std::cout << t.str();
}

int cmd_simulate(const std::string& cfg_path, const std::optional<std::string>& out) {
    if (!fs::is_regular_file(cfg_path)) {
        log("config error: cannot read " + cfg_path);
        return kExitConfig;
    }
    ExperimentConfig c = load_config(cfg_path);
    if (out) c.output = *out;
    log("simulating " + to_string(c.object) + ", K=" + std::to_string(c.K) + ", seed=" + std::to_string(c.seed));
    const RunOutcome r = run_scenario(c);
    log("wrote " + c.output);
    print_metrics(r.metrics());
    return 0;
}

int cmd_reconstruct(const ReconstructRequest& req) {
    const ReconstructionResult r = reconstruct_ensemble(req);
    log("wrote " + req.output.string() + " (" + std::to_string(r.iterations_used) + " iterations, KKT " +
        (r.kkt.ok ? "ok" : "failed") + ")");
    std::cout << read_file(req.output / "reconstruct.csv");
    return 0;
}

int cmd_evaluate(const std::string& dir) {
    std::cout << evaluate_run_dir(dir).str();
    return 0;
}

int cmd_reproduce(const std::string& figure, int seeds, std::uint64_t seed, const std::optional<std::string>& out,
                  bool artifacts) {
    const Figure fig = parse_figure(figure);
    const fs::path dir = out ? fs::path(*out) : fs::path("reproduce") / to_string(fig);
    fs::create_directories(dir);
    const SweepResult s =
        run_sweep(fig, seeds, seed, artifacts ? std::optional<fs::path>(dir) : std::nullopt, [](const std::string& m) { log(m); });
    sweep_runs_table(s).write(dir / "runs.csv");
    const CsvTable summary = sweep_summary_table(s);
    summary.write(dir / "summary.csv");
    log("wrote " + (dir / "summary.csv").string());
    std::cout << summary.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Far-field ghost imaging simulation and sparse reconstruction"};
    app.require_subcommand(1);

    std::string cfg_path;
    std::optional<std::string> sim_out;
    auto* sim = app.add_subcommand("simulate", "Run one experiment from a config file");
    sim->add_option("config", cfg_path, "Config file (key = value)")->required();
    sim->add_option("--out", sim_out, "Output directory (overrides the config's output key)");

    ReconstructRequest req;
    std::string ens_path, rec_out = "reconstruction", basis = "cartesian", tau_mode = "relative",
                          algorithm = "active_set";
    std::optional<std::string> truth;
    req.solver.tau = 1e-4;
    auto* rec = app.add_subcommand("reconstruct", "GI and GISC images from a stored ensemble");
    rec->add_option("ensemble", ens_path, "Ensemble file written with save_ensemble = true")->required();
    rec->add_option("--basis", basis, "cartesian or dct2")->check(CLI::IsMember({"cartesian", "dct2"}));
    rec->add_option("--tau", req.solver.tau, "Regularization weight")->capture_default_str();
    rec->add_option("--tau-mode", tau_mode, "relative or absolute")->check(CLI::IsMember({"relative", "absolute"}));
    rec->add_option("--K", req.K, "Use only the first K measurements (0: all)");
    rec->add_option("--algorithm", algorithm, "active_set or proximal_gradient")
        ->check(CLI::IsMember({"active_set", "proximal_gradient"}));
    rec->add_option("--max-iters", req.solver.max_iters, "Iteration limit")->capture_default_str();
    rec->add_option("--out", rec_out, "Output directory")->capture_default_str();
    rec->add_option("--truth", truth, "Ground-truth PGM for MSE");

    std::string run_dir;
    auto* eval = app.add_subcommand("evaluate", "Recompute scores from a run directory");
    eval->add_option("run-dir", run_dir, "Directory written by simulate")->required();

    std::string figure;
    int seeds = 10;
    std::uint64_t master_seed = 1;
    std::optional<std::string> rep_out;
    bool no_artifacts = false;
    auto* rep = app.add_subcommand("reproduce", "Parameter sweep of a figure");
    rep->add_option("figure", figure, "fig2, fig3 or fig4")->required()->check(CLI::IsMember({"fig2", "fig3", "fig4"}));
    rep->add_option("--seeds", seeds, "Replicates per cell")->capture_default_str()->check(CLI::PositiveNumber);
    rep->add_option("--seed", master_seed, "Master seed")->capture_default_str();
    rep->add_option("--out", rep_out, "Output directory (default reproduce/<figure>)");
    rep->add_flag("--no-artifacts", no_artifacts, "Skip the per-cell run directories");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    set_warning_handler([](const std::string& m) { log("warning: " + m); });
    try {
        if (*sim) return cmd_simulate(cfg_path, sim_out);
        if (*rec) {
            req.ensemble = ens_path;
            req.output = rec_out;
            req.basis = basis == "dct2" ? BasisKind::dct2 : BasisKind::cartesian;
            req.solver.tau_mode = tau_mode == "absolute" ? TauMode::absolute : TauMode::relative_to_ATy_inf;
            req.solver.algorithm = algorithm == "active_set" ? Algorithm::active_set : Algorithm::proximal_gradient;
            if (truth) req.truth = fs::path(*truth);
            return cmd_reconstruct(req);
        }
        if (*eval) return cmd_evaluate(run_dir);
        if (*rep) return cmd_reproduce(figure, seeds, master_seed, rep_out, !no_artifacts);
    } catch (const ConfigParseError& e) {
        log("config error: " + std::string(e.what()));
        return kExitConfig;
    } catch (const ConfigValidationError& e) {
        log("config error: " + std::string(e.what()));
        return kExitConfig;
    } catch (const PipelineError& e) {
        log("pipeline error in " + e.stage() + ": " + e.what());
        return kExitPipeline;
    } catch (const std::exception& e) {
        log("error: " + std::string(e.what()));
        return kExitPipeline;
    }
    return 0;
}
