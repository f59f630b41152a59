#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coneflow/effective.hpp"
#include "coneflow/fields.hpp"
#include "coneflow/observables.hpp"
#include "coneflow/params.hpp"
#include "coneflow/polytope.hpp"
#include "coneflow/sim.hpp"
#include "coneflow/stats.hpp"

namespace coneflow {

struct ExpBoundCheck {
    double z;
    double empirical;
    double se;
    double bound;
    bool pass;
};

struct StationarySummary {
    MeanSE mean_u, mean_v, mean_t, mean_u_minus_v;
    std::vector<ExpBoundCheck> exp_moment_checks;
    std::optional<MeanSE> untamed_fraction;
    long n_samples = 0;
    double burn_in = 0.0;
    bool batch_warning = false;  // batches shorter than 50x the autocorrelation time
    std::string config_hash;
};

// Batch-means estimation (32 batches) over the post-burn-in part of a
// recorded path. Throws TooShort when fewer than 64 samples remain.
StationarySummary estimate_stationary(const PathRecorder& rec, double burn_in);

struct MomentIdentityReport {
    double mean2_u, se2_u, target_u, z_u;  // 2*mean(U) vs b0
    double mean2_t, se2_t, target_t, z_t;  // 2*mean(T) vs b1
    bool pass;
};

// 2 E[U] = B0 and 2 E[T] = B1 at 3 SE
MomentIdentityReport check_moment_identities(const StationarySummary& sum,
                                             const ForcingBudgets& budgets);

enum class ExpBoundKind { VBound, UBound };

// E[e^{zV}(1+U)] <= Phi(z,B0,B0') (VBound) or E[e^{zU}(1+T)] <= Phi(z,B1,B1')
// (UBound); SE by bootstrap over batch means (200 resamples).
ExpBoundCheck check_exponential_bound(const PathRecorder& rec, double burn_in, double z,
                                      const ForcingBudgets& budgets, ExpBoundKind kind);

struct CondensationRow {
    int ell0;       // 1-based mode index in {3..N}
    double middle;  // bound with the harmonic tail sum
    double loose;   // bound with the ell0/(N-ell0) majorant (inf at ell0 = N)
    bool pass;      // lhs <= middle + 3 se
};

struct CondensationReport {
    double lhs;  // 2 * mean(U - V)
    double se;   // SE of the lhs (2 * SE of mean(U-V))
    std::vector<CondensationRow> rows;
    double eps_inf_reference;  // b0 - b_minus1
    bool middle_le_loose;      // exact arithmetic comparison
    bool pass;                 // every row passes
};

CondensationReport condensation_report(const StationarySummary& eff_summary,
                                       const ForcingBudgets& budgets, const Spectrum& s);

struct EquilibrationPoint {
    double t;
    std::vector<double> mean_sq;  // ensemble mean of x_l^2 per mode
    std::vector<double> se;
    double max_rel_dev;  // max_l |mean - q_l| / q_l
};

struct EquilibrationReport {
    std::vector<EquilibrationPoint> points;
    std::vector<double> q_target;
    double decay_rate;    // fitted exponential rate of the deviation (positive = relaxing)
    bool final_time_pass; // per-mode: within max(5% relative, 3 SE) at the last grid time
};

// Fast-only ensemble started from a single Good state; ensemble mean of each
// squared mode is tracked against the averaged coefficients on the fiber.
EquilibrationReport equilibration_test(const StateVector& x0, const std::vector<double>& t_grid,
                                       const SdeSimulator& sim, double u_min, double u_max,
                                       double eta, int ensemble, std::uint64_t seed,
                                       int n_threads);

// binomial fraction of Untamed states
MeanSE untamed_fraction(const std::vector<StateVector>& states, const Spectrum& s, double u_min,
                        double u_max, double eta);

struct ConditionalBinCheck {
    int bins_checked = 0;
    int comparisons = 0;
    int comparisons_passed = 0;
    double pass_fraction = 0.0;
};

// Gaussian draws binned by (u,v); per occupied bin the mean of x_l^2 is
// compared against the in-bin mean of q_l(U,V) at 3 SE of their difference
// (the pairing removes the bin-discretization bias).
ConditionalBinCheck conditional_consistency(const Spectrum& s, double a, long n_samples,
                                            int grid, long min_bin_count, const QRayTable& table,
                                            RngStream& rng);

struct InviscidCase {
    double eps;
    double kappa;
    EnergyDistance dist;  // replicate-averaged; se from the replicate spread
    double mean_gap;      // |2 E_full[U-V] - 2 E_eff[U-V]|, replicate-averaged
    long n_full_samples = 0;
    int n_replicates = 1;
};

struct InviscidReport {
    std::vector<InviscidCase> cases;  // the eps grid at the base kappa
    std::optional<InviscidCase> kappa_probe;
    MeanSE eff_u_minus_v;
    long n_eff_samples = 0;
    bool distance_decreases;  // first-to-last drop beyond 1 combined SE
    bool gap_decreases;
};

struct SweepConfig {
    std::vector<double> eps_grid;  // descending
    double kappa_probe_eps = 0.0;  // 0: no probe
    double kappa_probe_value = 0.25;
    SimConfig full_cfg;   // per-eps template; eps comes from ModelParams override
    SimConfig eff_cfg;
    int max_points = 1024;
    int n_replicates = 4;  // independent full-side sample sets per eps
    int n_threads = 1;
};

InviscidReport inviscid_sweep(const Spectrum& s, const ModelParams& base,
                              const TriadTensor& triads, const StirringFamily& stir,
                              const QSource& q, const SweepConfig& cfg);

// (U,V) records after burn-in, thinned to a stride of 5x the integrated
// autocorrelation time of U
std::vector<std::array<double, 2>> thinned_uv_samples(const PathRecorder& rec, double burn_in);

}  // namespace coneflow
