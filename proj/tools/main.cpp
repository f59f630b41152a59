#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "coneflow/commands.hpp"
#include "coneflow/config.hpp"
#include "coneflow/errors.hpp"
#include "coneflow/io.hpp"

namespace {

coneflow::RunConfig load_config(const std::string& path) {
    if (path.empty()) return coneflow::parse_config(nlohmann::json::object());
    return coneflow::parse_config_file(path);
}

std::string resolve_out_dir(const coneflow::RunConfig& cfg, const std::string& flag_out) {
    if (!flag_out.empty()) return flag_out;
    if (const char* env = std::getenv("CONEFLOW_OUT")) return env;
    return cfg.out_dir;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coneflow: spectral SDE laboratory with an enstrophy-energy cone diffusion"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_flag;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    int threads_flag = 0;
    app.add_option("--config", config_path, "JSON config file (defaults used when omitted)");
    app.add_option("--out", out_flag, "output directory (overrides config and CONEFLOW_OUT)");
    app.add_option("--seed", seed_flag, "seed override")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--threads", threads_flag, "worker thread cap");

    auto* cmd_spectrum = app.add_subcommand("spectrum", "emit the eigenvalue ladder");
    auto* cmd_drift = app.add_subcommand("drift-table", "emit the triad tensor as JSON");
    auto* cmd_qtable = app.add_subcommand("qtable", "emit averaged coefficients along the ray grid");
    int qtable_ratios = 0;
    long long qtable_mc = 0;
    cmd_qtable->add_option("--ratios", qtable_ratios, "number of ratio grid points");
    cmd_qtable->add_option("--mc", qtable_mc, "Monte Carlo samples (0: exact)");

    auto* cmd_simulate = app.add_subcommand("simulate", "run one trajectory and emit observables");
    std::string sim_mode = "full";
    cmd_simulate->add_option("--mode", sim_mode, "full | fast | effective | reference")
        ->check(CLI::IsMember({"full", "fast", "effective", "reference"}));

    auto* cmd_check = app.add_subcommand("check", "stationary identity and conservation checks");
    auto* cmd_inviscid = app.add_subcommand("inviscid", "eps sweep against the cone diffusion");
    std::vector<double> eps_flag;
    cmd_inviscid->add_option("--eps", eps_flag, "descending eps grid (>= 3 values)");
    auto* cmd_condensation =
        app.add_subcommand("condensation", "effective stationary run and condensation bounds");
    auto* cmd_equilibrate =
        app.add_subcommand("equilibrate", "fast-flow relaxation toward the fiber average");
    double equil_eta = 0.0;
    std::vector<double> t_grid_flag;
    cmd_equilibrate->add_option("--eta", equil_eta, "ratio-gap for the Good classification");
    cmd_equilibrate->add_option("--t-grid", t_grid_flag, "observation times");

    CLI11_PARSE(app, argc, argv);

    try {
        coneflow::RunConfig cfg = load_config(config_path);
        if (seed_set) cfg.sim.seed = seed_flag;
        if (threads_flag > 0) cfg.threads = threads_flag;
        const std::string out_dir = resolve_out_dir(cfg, out_flag);

        coneflow::CommandOutcome outcome;
        if (cmd_spectrum->parsed()) {
            outcome = coneflow::run_spectrum_cmd(cfg, out_dir);
        } else if (cmd_drift->parsed()) {
            outcome = coneflow::run_drift_table_cmd(cfg, out_dir);
        } else if (cmd_qtable->parsed()) {
            const int ratios = qtable_ratios > 0 ? qtable_ratios : cfg.q_grid;
            outcome = coneflow::run_qtable_cmd(cfg, out_dir, ratios, qtable_mc);
        } else if (cmd_simulate->parsed()) {
            outcome = coneflow::run_simulate_cmd(cfg, out_dir, sim_mode);
        } else if (cmd_check->parsed()) {
            outcome = coneflow::run_check_cmd(cfg, out_dir);
        } else if (cmd_inviscid->parsed()) {
            if (!eps_flag.empty()) cfg.eps_grid = eps_flag;
            outcome = coneflow::run_inviscid_cmd(cfg, out_dir);
        } else if (cmd_condensation->parsed()) {
            outcome = coneflow::run_condensation_cmd(cfg, out_dir);
        } else if (cmd_equilibrate->parsed()) {
            if (equil_eta > 0.0) cfg.eta = equil_eta;
            if (!t_grid_flag.empty()) cfg.t_grid = t_grid_flag;
            outcome = coneflow::run_equilibrate_cmd(cfg, out_dir);
        }
        return outcome.exit_code;
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
}
