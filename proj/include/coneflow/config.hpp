#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "coneflow/params.hpp"
#include "coneflow/sim.hpp"
#include "coneflow/spectrum.hpp"

namespace coneflow {

// Full run configuration. One JSON document drives every command; unknown
// keys are rejected so configs stay hashable and diff-friendly. All times are
// model time (unitless).
struct RunConfig {
    // spectrum block: torus (aspect + wavevectors) or an explicit ladder
    double aspect = 0.7;
    std::vector<std::array<int, 2>> wavevectors = {{0, 1}, {1, 0}, {1, 1}, {0, 2}};
    std::vector<double> explicit_mu;  // nonempty selects the explicit source

    double a = 1.0;
    std::vector<double> delta;  // empty: zeros
    double kappa = 0.5;
    double eps = 0.5;

    SimConfig sim;

    // experiment knobs
    std::vector<double> eps_grid = {0.4, 0.1, 0.025};
    double eta = 0.2;
    double u_min = 0.05;
    double u_max = 50.0;
    double z_scale = 0.5;          // exponential-bound checks use z = z_scale / B'
    std::vector<int> ell0;         // empty: all of {3..N}
    int q_grid = 2048;             // ray-table resolution
    int ensemble = 512;            // equilibration ensemble size
    std::vector<double> t_grid;    // equilibration observation times (empty: derived)
    double equil_u = 2.0;
    double equil_v = 1.0;
    double kappa_probe = 0.25;
    double eff_h = 1e-3;           // effective-diffusion step
    double eff_t_end = 2000.0;
    double eff_burn_in = 20.0;
    int max_points = 1024;         // energy-distance thinning cap
    int sweep_replicates = 4;      // full-side sample sets per eps in the sweep

    std::string out_dir = "out";
    int threads = 2;

    Spectrum build_spectrum() const;
    ModelParams build_params(const Spectrum& s) const;
    SimConfig effective_sim_config() const;
    std::vector<int> ell0_list(const Spectrum& s) const;

    // canonical JSON (stable key order via emit) hashed with SHA-256
    std::string config_hash() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_file(const std::string& path);
nlohmann::json emit_config(const RunConfig& cfg);

}  // namespace coneflow
