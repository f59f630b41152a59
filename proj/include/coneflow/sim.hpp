#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "coneflow/fields.hpp"
#include "coneflow/observables.hpp"
#include "coneflow/params.hpp"
#include "coneflow/rng.hpp"
#include "coneflow/spectrum.hpp"

namespace coneflow {

enum class SimMode { Full, FastOnly, Reference };

struct SimConfig {
    double h = 0.05;                  // outer step
    double fast_substep_factor = 0.2; // fast internal step = factor * eps, capped by h
    double t_end = 500.0;
    double burn_in = 50.0;
    std::uint64_t seed = 12345;
    int record_stride = 1;            // record every k-th outer step
    double midpoint_tol = 1e-12;
    int midpoint_max_iter = 50;
    SimMode mode = SimMode::Full;
    int state_stride = 0;             // record full states every k records (0: never)
    // knobs for the good/untamed flag attached to each record
    double eta = 0.2;
    double u_min = 1e-3;
    double u_max = 1e6;

    void validate() const;  // throws ValidationError
};

struct ObsRecord {
    double t;
    double u, v, t_obs;
    double ratio;
    bool good = false;       // SDE runs: good/untamed classification
    bool reflected = false;  // effective runs: step needed a boundary reflection
    bool burn_in = false;
};

struct PathRecorder {
    std::vector<ObsRecord> records;
    std::vector<double> state_times;
    std::vector<StateVector> states;

    std::vector<double> series_u(bool post_burn_in = true) const;
    std::vector<double> series_v(bool post_burn_in = true) const;
    std::vector<double> series_t(bool post_burn_in = true) const;
    std::vector<double> series_u_minus_v(bool post_burn_in = true) const;
    std::size_t post_burn_in_count() const;
};

// Time integration of the N-dimensional system. One instance is reusable
// across trajectories; all methods are deterministic functions of the inputs
// and the random stream.
class SdeSimulator {
  public:
    SdeSimulator(const Spectrum& s, const ModelParams& p, const TriadTensor& t,
                 const StirringFamily& f);

    const Spectrum& spectrum() const { return spec_; }
    const ModelParams& params() const { return params_; }
    const StirringFamily& stirring() const { return stir_; }

    // exact-in-distribution Ornstein-Uhlenbeck transition over tau
    void ou_step(StateVector& x, double tau, RngStream& rng) const;

    // one Stratonovich implicit-midpoint step of the fast flow (drift and
    // stirring only); preserves both quadratic forms to solver tolerance.
    // Throws MidpointDiverged when the fixed-point iteration fails.
    void fast_midpoint_step(StateVector& x, double dt, RngStream& rng, double tol,
                            int max_iter) const;

    // fast flow over a window, with divergence handling by local step halving
    // (up to 8 times, fresh increments per half) before giving up
    void fast_flow(StateVector& x, double window, double dt_target, RngStream& rng,
                   const SimConfig& cfg) const;

    // OU half step, fast substeps covering h, OU half step
    void strang_step(StateVector& x, const SimConfig& cfg, RngStream& rng) const;

    // Stratonovich predictor-corrector reference; same per-step noise layout
    // (forcing increments first, stirring increments second)
    void heun_step(StateVector& x, double h, RngStream& rng, bool fast_only = false) const;

    // Ito-Euler reference using the analytic Stratonovich-to-Ito correction
    void ito_euler_step(StateVector& x, double h, RngStream& rng) const;

    // draw from the reference Gaussian (variance a/2 per mode)
    StateVector draw_stationary(RngStream& rng) const;

    PathRecorder simulate(const SimConfig& cfg, std::optional<StateVector> x0,
                          std::uint64_t stream_id) const;

  private:
    void eval_fast_increment(const double* x, double* out) const;   // uses weights_
    void fill_fast_weights(double dt, RngStream& rng) const;
    void ou_coeffs(double tau, std::vector<double>& decay, std::vector<double>& amp) const;

    Spectrum spec_;
    ModelParams params_;
    TriadTensor triads_;
    StirringFamily stir_;
    FastFieldTable table_;
    std::vector<double> forcing_amp_;  // sqrt(lambda_l a (1+delta_l))
    mutable std::vector<double> weights_;
    mutable std::vector<double> scratch_y_, scratch_f_, scratch_z_, scratch_mid_;
    mutable std::vector<double> ou_decay_, ou_amp_, ou_noise_;
};

// Run an ensemble of trajectories with derived streams (stream_id = base + k),
// in parallel across threads; results are merged in trajectory order.
std::vector<PathRecorder> simulate_ensemble(const SdeSimulator& sim, const SimConfig& cfg,
                                            const std::vector<StateVector>& initial_states,
                                            std::uint64_t stream_base, int n_threads);

}  // namespace coneflow
