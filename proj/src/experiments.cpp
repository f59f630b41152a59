#include "coneflow/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "coneflow/errors.hpp"

namespace coneflow {

namespace {

std::vector<const ObsRecord*> post_burn_in(const PathRecorder& rec, double burn_in) {
    std::vector<const ObsRecord*> out;
    for (const auto& r : rec.records) {
        if (r.t > burn_in) out.push_back(&r);
    }
    return out;
}

}  // namespace

StationarySummary estimate_stationary(const PathRecorder& rec, double burn_in) {
    if (rec.records.empty() || rec.records.back().t <= burn_in) {
        throw TooShort("recorder does not extend past the burn-in window");
    }
    const auto post = post_burn_in(rec, burn_in);
    if (post.size() < 64) {
        throw TooShort("need at least 64 post-burn-in samples, got " +
                       std::to_string(post.size()));
    }
    std::vector<double> u, v, t, umv;
    u.reserve(post.size());
    for (const auto* r : post) {
        u.push_back(r->u);
        v.push_back(r->v);
        t.push_back(r->t_obs);
        umv.push_back(r->u - r->v);
    }
    StationarySummary s;
    s.mean_u = batch_means(u);
    s.mean_v = batch_means(v);
    s.mean_t = batch_means(t);
    s.mean_u_minus_v = batch_means(umv);
    s.n_samples = static_cast<long>(post.size());
    s.burn_in = burn_in;
    s.batch_warning = !batches_resolve_autocorrelation(u);
    return s;
}

MomentIdentityReport check_moment_identities(const StationarySummary& sum,
                                             const ForcingBudgets& budgets) {
    MomentIdentityReport r;
    r.mean2_u = 2.0 * sum.mean_u.mean;
    r.se2_u = 2.0 * sum.mean_u.se;
    r.target_u = budgets.b0;
    r.z_u = (r.mean2_u - r.target_u) / r.se2_u;
    r.mean2_t = 2.0 * sum.mean_t.mean;
    r.se2_t = 2.0 * sum.mean_t.se;
    r.target_t = budgets.b1;
    r.z_t = (r.mean2_t - r.target_t) / r.se2_t;
    r.pass = std::abs(r.z_u) <= 3.0 && std::abs(r.z_t) <= 3.0;
    return r;
}

ExpBoundCheck check_exponential_bound(const PathRecorder& rec, double burn_in, double z,
                                      const ForcingBudgets& budgets, ExpBoundKind kind) {
    const double b = (kind == ExpBoundKind::VBound) ? budgets.b0 : budgets.b1;
    const double bp = (kind == ExpBoundKind::VBound) ? budgets.b0_prime : budgets.b1_prime;
    const double bound = phi_bound(z, b, bp);  // throws DivergentSeries when z*b' >= 1

    const auto post = post_burn_in(rec, burn_in);
    if (post.size() < 64) throw TooShort("exponential bound check needs 64+ samples");
    std::vector<double> y;
    y.reserve(post.size());
    for (const auto* r : post) {
        if (kind == ExpBoundKind::VBound) {
            y.push_back(std::exp(z * r->v) * (1.0 + r->u));
        } else {
            y.push_back(std::exp(z * r->u) * (1.0 + r->t_obs));
        }
    }
    // bootstrap the mean over 32 batch means
    const int nb = 32;
    const std::size_t len = y.size() / nb;
    std::vector<double> bm(nb, 0.0);
    for (int k = 0; k < nb; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += y[k * len + i];
        bm[k] = s / static_cast<double>(len);
    }
    const double mean = std::accumulate(bm.begin(), bm.end(), 0.0) / nb;
    RngStream rng(0xb00757u, static_cast<std::uint64_t>(z * 1e6));
    const int n_boot = 200;
    std::vector<double> reps(n_boot);
    for (int r = 0; r < n_boot; ++r) {
        double s = 0.0;
        for (int k = 0; k < nb; ++k) s += bm[rng.uniform_index(nb)];
        reps[r] = s / nb;
    }
    double m = std::accumulate(reps.begin(), reps.end(), 0.0) / n_boot;
    double var = 0.0;
    for (double v : reps) var += (v - m) * (v - m);
    const double se = std::sqrt(var / (n_boot - 1));

    ExpBoundCheck c;
    c.z = z;
    c.empirical = mean;
    c.se = se;
    c.bound = bound;
    c.pass = mean <= bound + 3.0 * se;
    return c;
}

CondensationReport condensation_report(const StationarySummary& eff_summary,
                                       const ForcingBudgets& budgets, const Spectrum& s) {
    CondensationReport rep;
    rep.lhs = 2.0 * eff_summary.mean_u_minus_v.mean;
    rep.se = 2.0 * eff_summary.mean_u_minus_v.se;
    rep.eps_inf_reference = budgets.b0 - budgets.b_minus1;
    rep.middle_le_loose = true;
    rep.pass = true;

    const int N = s.N();
    const int n = s.n();
    const double lam3 = s.lambda()[2];
    const double prefactor = lam3 / (lam3 - 1.0);
    for (int ell0 = 3; ell0 <= N; ++ell0) {
        const int i0 = (ell0 + 1) / 2;  // ell0 = 2 i0 or 2 i0 - 1
        double tail = 0.0;
        for (int k = 1; k <= i0 - 2; ++k) tail += 1.0 / static_cast<double>(n - k);
        CondensationRow row;
        row.ell0 = ell0;
        const double head = (budgets.b1 - budgets.b0) / (s.lambda()[ell0 - 1] - 1.0);
        row.middle = head + prefactor * tail * budgets.b0;
        row.loose = (ell0 == N)
                        ? std::numeric_limits<double>::infinity()
                        : head + prefactor * (static_cast<double>(ell0) / (N - ell0)) * budgets.b0;
        row.pass = rep.lhs <= row.middle + 3.0 * rep.se;
        rep.middle_le_loose = rep.middle_le_loose && row.middle <= row.loose;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

EquilibrationReport equilibration_test(const StateVector& x0, const std::vector<double>& t_grid,
                                       const SdeSimulator& sim, double u_min, double u_max,
                                       double eta, int ensemble, std::uint64_t seed,
                                       int n_threads) {
    const Spectrum& s = sim.spectrum();
    if (classify_state(x0, s, u_min, u_max, eta) != StateClass::Good) {
        const Observables o = compute_observables(x0, s);
        double gap = 1e300;
        for (double mu : s.mu()) gap = std::min(gap, std::abs(o.u / o.v - mu));
        throw NotGoodState("equilibration must start from a Good state: u = " +
                           std::to_string(o.u) + ", ratio " + std::to_string(o.u / o.v) +
                           " has eigenvalue gap " + std::to_string(gap) +
                           "; lower eta below that gap or move the start point");
    }
    const Observables o = compute_observables(x0, s);
    const QValues qv = q_values(ConePoint{o.u, o.v}, s);

    const int N = s.N();
    const int T = static_cast<int>(t_grid.size());
    // accumulate sum and sum of squares of x_l^2 at every grid time
    std::vector<std::vector<double>> sum(T, std::vector<double>(N, 0.0));
    std::vector<std::vector<double>> sumsq(T, std::vector<double>(N, 0.0));
    std::mutex merge_mutex;

    const double dt_fast = 0.2 * sim.params().eps;
    SimConfig flow_cfg;  // only the midpoint knobs are read by fast_flow
    flow_cfg.midpoint_tol = 1e-12;
    flow_cfg.midpoint_max_iter = 50;

    std::atomic<int> next{0};
    auto worker = [&]() {
        SdeSimulator local(sim);
        std::vector<std::vector<double>> lsum(T, std::vector<double>(N, 0.0));
        std::vector<std::vector<double>> lsumsq(T, std::vector<double>(N, 0.0));
        while (true) {
            const int k = next.fetch_add(1);
            if (k >= ensemble) break;
            RngStream rng(seed, 1000 + static_cast<std::uint64_t>(k));
            StateVector x = x0;
            double t_prev = 0.0;
            for (int j = 0; j < T; ++j) {
                const double window = t_grid[j] - t_prev;
                if (window > 0.0) local.fast_flow(x, window, dt_fast, rng, flow_cfg);
                t_prev = t_grid[j];
                for (int l = 0; l < N; ++l) {
                    const double sq = x[l] * x[l];
                    lsum[j][l] += sq;
                    lsumsq[j][l] += sq * sq;
                }
            }
        }
        std::lock_guard<std::mutex> lock(merge_mutex);
        for (int j = 0; j < T; ++j) {
            for (int l = 0; l < N; ++l) {
                sum[j][l] += lsum[j][l];
                sumsq[j][l] += lsumsq[j][l];
            }
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::max(1, n_threads);
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    EquilibrationReport rep;
    rep.q_target = qv.q;
    for (int j = 0; j < T; ++j) {
        EquilibrationPoint pt;
        pt.t = t_grid[j];
        pt.mean_sq.resize(N);
        pt.se.resize(N);
        double max_rel = 0.0;
        for (int l = 0; l < N; ++l) {
            const double mean = sum[j][l] / ensemble;
            const double var =
                std::max(0.0, sumsq[j][l] / ensemble - mean * mean) * ensemble / (ensemble - 1.0);
            pt.mean_sq[l] = mean;
            pt.se[l] = std::sqrt(var / ensemble);
            if (qv.q[l] > 0.0) {
                max_rel = std::max(max_rel, std::abs(mean - qv.q[l]) / qv.q[l]);
            }
        }
        pt.max_rel_dev = max_rel;
        rep.points.push_back(pt);
    }

    // fitted exponential decay rate of the deviation over the grid
    std::vector<double> ts, logdev;
    for (const auto& pt : rep.points) {
        if (pt.max_rel_dev > 1e-12) {
            ts.push_back(pt.t);
            logdev.push_back(std::log(pt.max_rel_dev));
        }
    }
    rep.decay_rate = (ts.size() >= 2) ? -linear_slope(ts, logdev) : 0.0;

    const auto& last = rep.points.back();
    rep.final_time_pass = true;
    for (int l = 0; l < N; ++l) {
        const double tol = std::max(0.05 * qv.q[l], 3.0 * last.se[l]);
        if (std::abs(last.mean_sq[l] - qv.q[l]) > tol) rep.final_time_pass = false;
    }
    return rep;
}

MeanSE untamed_fraction(const std::vector<StateVector>& states, const Spectrum& s, double u_min,
                        double u_max, double eta) {
    if (states.size() < 1000) {
        throw TooFewSamples("untamed fraction needs at least 1000 states, got " +
                            std::to_string(states.size()));
    }
    long untamed = 0;
    for (const auto& x : states) {
        if (classify_state(x, s, u_min, u_max, eta) == StateClass::Untamed) ++untamed;
    }
    const double n = static_cast<double>(states.size());
    const double f = static_cast<double>(untamed) / n;
    return {f, std::sqrt(std::max(f * (1.0 - f), 1.0 / n) / n)};
}

ConditionalBinCheck conditional_consistency(const Spectrum& s, double a, long n_samples,
                                            int grid, long min_bin_count, const QRayTable& table,
                                            RngStream& rng) {
    const int N = s.N();
    const double sd = std::sqrt(0.5 * a);
    // bin by (ratio, v): the ratio axis carries the sector structure
    const double r_lo = 1.0, r_hi = s.lambda_max();
    // v range from a pilot: v is concentrated around E[V] = (a/2) sum 1/lambda
    double v_mean = 0.0;
    for (int l = 0; l < N; ++l) v_mean += 0.5 * a * s.inv_lambda()[l];
    const double v_lo = 0.0, v_hi = 3.0 * v_mean;

    struct Bin {
        long count = 0;
        std::vector<double> sum_diff, sum_diff_sq;  // x_l^2 - q_l(U,V) per mode
    };
    std::vector<Bin> bins(static_cast<std::size_t>(grid) * grid);
    for (auto& b : bins) {
        b.sum_diff.assign(N, 0.0);
        b.sum_diff_sq.assign(N, 0.0);
    }

    StateVector x(N);
    std::vector<double> q(N);
    for (long k = 0; k < n_samples; ++k) {
        for (int l = 0; l < N; ++l) x[l] = sd * rng.gaussian();
        const Observables o = compute_observables(x, s);
        const double ratio = o.u / o.v;
        int ri = static_cast<int>((ratio - r_lo) / (r_hi - r_lo) * grid);
        int vi = static_cast<int>((o.v - v_lo) / (v_hi - v_lo) * grid);
        if (ri < 0 || ri >= grid || vi < 0 || vi >= grid) continue;
        table.eval(o.u, o.v, q.data());
        Bin& b = bins[static_cast<std::size_t>(ri) * grid + vi];
        ++b.count;
        for (int l = 0; l < N; ++l) {
            const double d = x[l] * x[l] - q[l];
            b.sum_diff[l] += d;
            b.sum_diff_sq[l] += d * d;
        }
    }

    ConditionalBinCheck out;
    for (const auto& b : bins) {
        if (b.count < min_bin_count) continue;
        ++out.bins_checked;
        for (int l = 0; l < N; ++l) {
            const double mean = b.sum_diff[l] / b.count;
            const double var =
                std::max(0.0, b.sum_diff_sq[l] / b.count - mean * mean) * b.count / (b.count - 1.0);
            const double se = std::sqrt(var / b.count);
            ++out.comparisons;
            if (std::abs(mean) <= 3.0 * se) ++out.comparisons_passed;
        }
    }
    out.pass_fraction =
        out.comparisons > 0 ? static_cast<double>(out.comparisons_passed) / out.comparisons : 0.0;
    return out;
}

std::vector<std::array<double, 2>> thinned_uv_samples(const PathRecorder& rec, double burn_in) {
    const auto post = post_burn_in(rec, burn_in);
    std::vector<double> u;
    u.reserve(post.size());
    for (const auto* r : post) u.push_back(r->u);
    const double tau = integrated_autocorr_time(u);
    const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(5.0 * tau));
    std::vector<std::array<double, 2>> out;
    for (std::size_t i = 0; i < post.size(); i += stride) {
        out.push_back({post[i]->u, post[i]->v});
    }
    return out;
}

InviscidReport inviscid_sweep(const Spectrum& s, const ModelParams& base,
                              const TriadTensor& triads, const StirringFamily& stir,
                              const QSource& q, const SweepConfig& cfg) {
    if (cfg.eps_grid.size() < 3) {
        throw ValidationError("inviscid.eps_grid", "need at least 3 values");
    }
    for (std::size_t i = 0; i + 1 < cfg.eps_grid.size(); ++i) {
        if (cfg.eps_grid[i + 1] > cfg.eps_grid[i]) {
            throw ValidationError("inviscid.eps_grid", "grid must be sorted descending");
        }
    }

    // one shared effective-diffusion stationary sample set
    EffectivePath eff = simulate_effective(cfg.eff_cfg, base, s, q, /*stream_id=*/900001);
    auto eff_uv = thinned_uv_samples(eff.recorder, cfg.eff_cfg.burn_in);
    StationarySummary eff_sum = estimate_stationary(eff.recorder, cfg.eff_cfg.burn_in);

    InviscidReport rep;
    rep.eff_u_minus_v = eff_sum.mean_u_minus_v;
    rep.n_eff_samples = static_cast<long>(eff_uv.size());

    // replicated full-side sample sets against the one shared effective set:
    // the common effective noise cancels in differences across eps, and the
    // replicate spread gives the error bar of the averaged distance
    const int R = std::max(1, cfg.n_replicates);
    auto run_case = [&](double eps, double kappa, std::uint64_t stream_base, int n_rep) {
        ModelParams p = base;
        p.eps = eps;
        p.kappa = kappa;
        SdeSimulator sim(s, p, triads, stir);
        std::vector<double> dists, boot_ses, gaps;
        long n_full = 0;
        std::atomic<int> next{0};
        std::mutex merge;
        auto worker = [&]() {
            SdeSimulator local(sim);
            while (true) {
                const int r = next.fetch_add(1);
                if (r >= n_rep) break;
                PathRecorder rec =
                    local.simulate(cfg.full_cfg, std::nullopt, stream_base + 10 * r);
                auto uv = thinned_uv_samples(rec, cfg.full_cfg.burn_in);
                StationarySummary sum = estimate_stationary(rec, cfg.full_cfg.burn_in);
                RngStream boot_rng(cfg.full_cfg.seed, stream_base + 10 * r + 5000);
                EnergyDistance d = energy_distance(uv, eff_uv, boot_rng, cfg.max_points);
                std::lock_guard<std::mutex> lock(merge);
                dists.push_back(d.distance);
                boot_ses.push_back(d.se);
                gaps.push_back(
                    std::abs(2.0 * sum.mean_u_minus_v.mean - 2.0 * eff_sum.mean_u_minus_v.mean));
                n_full += d.n_a;
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::max(1, std::min(cfg.n_threads, n_rep)); ++t)
            pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        std::sort(dists.begin(), dists.end());  // deterministic merge order
        std::sort(gaps.begin(), gaps.end());

        InviscidCase c;
        c.eps = eps;
        c.kappa = kappa;
        c.n_replicates = n_rep;
        c.n_full_samples = n_full;
        double dm = 0.0, gm = 0.0, bs = 0.0;
        for (double v : dists) dm += v;
        for (double v : gaps) gm += v;
        for (double v : boot_ses) bs += v;
        dm /= n_rep;
        gm /= n_rep;
        bs /= n_rep;
        double var = 0.0;
        for (double v : dists) var += (v - dm) * (v - dm);
        const double spread_se = n_rep > 1 ? std::sqrt(var / (n_rep - 1) / n_rep) : bs;
        c.dist.distance = dm;
        c.dist.se = std::max(spread_se, bs / std::sqrt(static_cast<double>(n_rep)));
        c.dist.n_a = static_cast<int>(n_full / n_rep);
        c.dist.n_b = static_cast<int>(eff_uv.size());
        c.mean_gap = gm;
        return c;
    };

    for (std::size_t i = 0; i < cfg.eps_grid.size(); ++i) {
        rep.cases.push_back(run_case(cfg.eps_grid[i], base.kappa, 100 + 1000 * i, R));
    }
    if (cfg.kappa_probe_eps > 0.0) {
        // reported, not gated: a quarter of the replication is plenty
        rep.kappa_probe =
            run_case(cfg.kappa_probe_eps, cfg.kappa_probe_value, 7001, std::max(1, R / 4));
    }

    const auto& first = rep.cases.front();
    const auto& last = rep.cases.back();
    const double combined_se = std::sqrt(first.dist.se * first.dist.se + last.dist.se * last.dist.se);
    rep.distance_decreases = first.dist.distance - last.dist.distance > combined_se;
    rep.gap_decreases = first.mean_gap > last.mean_gap;
    return rep;
}

}  // namespace coneflow
