#pragma once

#include <string>

#include <json.hpp>

#include "coneflow/config.hpp"

namespace coneflow {

struct CommandOutcome {
    int exit_code = 0;
    nlohmann::json summary;
};

// Command pipelines. Each writes its artifacts plus a manifest into out_dir
// and returns exit 0 iff every gated check passed. The CLI is a thin shell
// over these; the acceptance suite calls them directly.

CommandOutcome run_spectrum_cmd(const RunConfig& cfg, const std::string& out_dir);
CommandOutcome run_drift_table_cmd(const RunConfig& cfg, const std::string& out_dir);
CommandOutcome run_qtable_cmd(const RunConfig& cfg, const std::string& out_dir, int ratios,
                              long long mc_samples);  // mc_samples == 0: exact
CommandOutcome run_simulate_cmd(const RunConfig& cfg, const std::string& out_dir,
                                const std::string& mode);
CommandOutcome run_check_cmd(const RunConfig& cfg, const std::string& out_dir);
CommandOutcome run_inviscid_cmd(const RunConfig& cfg, const std::string& out_dir);
CommandOutcome run_condensation_cmd(const RunConfig& cfg, const std::string& out_dir);
CommandOutcome run_equilibrate_cmd(const RunConfig& cfg, const std::string& out_dir);

}  // namespace coneflow
