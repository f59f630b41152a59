#include "coneflow/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "coneflow/errors.hpp"
#include "coneflow/kernels.hpp"

namespace coneflow {

void SimConfig::validate() const {
    if (!(h > 0.0)) throw ValidationError("sim.h", "outer step must be positive");
    if (!(fast_substep_factor > 0.0)) {
        throw ValidationError("sim.fast_substep_factor", "must be positive");
    }
    if (!(t_end > 0.0)) throw ValidationError("sim.t_end", "must be positive");
    if (!(burn_in >= 0.0) || burn_in >= t_end) {
        throw ValidationError("sim.burn_in", "must lie in [0, t_end)");
    }
    if (record_stride < 1) throw ValidationError("sim.record_stride", "must be >= 1");
    if (!(midpoint_tol > 0.0)) throw ValidationError("sim.midpoint_tol", "must be positive");
    if (midpoint_max_iter < 1) throw ValidationError("sim.midpoint_max_iter", "must be >= 1");
    if (!(eta > 0.0)) throw ValidationError("sim.eta", "must be positive");
    if (!(u_min > 0.0) || !(u_max > u_min)) {
        throw ValidationError("sim.u_min", "need 0 < u_min < u_max");
    }
}

namespace {

std::vector<double> extract_series(const PathRecorder& rec, double ObsRecord::*field,
                                   bool post_burn_in) {
    std::vector<double> out;
    out.reserve(rec.records.size());
    for (const auto& r : rec.records) {
        if (post_burn_in && r.burn_in) continue;
        out.push_back(r.*field);
    }
    return out;
}

}  // namespace

std::vector<double> PathRecorder::series_u(bool post) const {
    return extract_series(*this, &ObsRecord::u, post);
}
std::vector<double> PathRecorder::series_v(bool post) const {
    return extract_series(*this, &ObsRecord::v, post);
}
std::vector<double> PathRecorder::series_t(bool post) const {
    return extract_series(*this, &ObsRecord::t_obs, post);
}
std::vector<double> PathRecorder::series_u_minus_v(bool post) const {
    std::vector<double> out;
    for (const auto& r : records) {
        if (post && r.burn_in) continue;
        out.push_back(r.u - r.v);
    }
    return out;
}
std::size_t PathRecorder::post_burn_in_count() const {
    std::size_t c = 0;
    for (const auto& r : records)
        if (!r.burn_in) ++c;
    return c;
}

SdeSimulator::SdeSimulator(const Spectrum& s, const ModelParams& p, const TriadTensor& t,
                           const StirringFamily& f)
    : spec_(s), params_(p), triads_(t), stir_(f), table_(FastFieldTable::build(t, f, s)) {
    params_.validate(spec_);
    const int N = spec_.N();
    forcing_amp_.resize(N);
    for (int l = 0; l < N; ++l) {
        forcing_amp_[l] =
            std::sqrt(spec_.lambda_of(l) * params_.a * (1.0 + params_.delta_of_mode(l)));
    }
    weights_.assign(table_.n_weights, 0.0);
    scratch_y_.assign(N, 0.0);
    scratch_f_.assign(N, 0.0);
    scratch_z_.assign(N, 0.0);
    scratch_mid_.assign(N, 0.0);
    ou_decay_.assign(N, 0.0);
    ou_amp_.assign(N, 0.0);
    ou_noise_.assign(N, 0.0);
}

void SdeSimulator::ou_coeffs(double tau, std::vector<double>& decay,
                             std::vector<double>& amp) const {
    const int N = spec_.N();
    for (int l = 0; l < N; ++l) {
        const double lam = spec_.lambda_of(l);
        const double var = 0.5 * params_.a * (1.0 + params_.delta_of_mode(l));
        decay[l] = std::exp(-lam * tau);
        amp[l] = std::sqrt(var * (-std::expm1(-2.0 * lam * tau)));
    }
}

void SdeSimulator::ou_step(StateVector& x, double tau, RngStream& rng) const {
    if (static_cast<int>(x.size()) != spec_.N()) {
        throw DimensionMismatch("ou_step: state size disagrees with spectrum");
    }
    ou_coeffs(tau, ou_decay_, ou_amp_);
    for (int l = 0; l < spec_.N(); ++l) ou_noise_[l] = rng.gaussian();
    kernels::ops().ou_update(x.data(), ou_decay_.data(), ou_amp_.data(), ou_noise_.data(),
                             spec_.N());
}

void SdeSimulator::fill_fast_weights(double dt, RngStream& rng) const {
    weights_[0] = dt / params_.eps;
    const double stir_amp = std::sqrt(params_.kappa / params_.eps) * std::sqrt(dt);
    for (int m = 1; m < table_.n_weights; ++m) {
        weights_[m] = stir_amp * rng.gaussian();
    }
}

void SdeSimulator::eval_fast_increment(const double* x, double* out) const {
    std::fill(out, out + spec_.N(), 0.0);
    table_.apply(x, weights_.data(), out);
}

void SdeSimulator::fast_midpoint_step(StateVector& x, double dt, RngStream& rng, double tol,
                                      int max_iter) const {
    const int N = spec_.N();
    fill_fast_weights(dt, rng);

    const auto& k = kernels::ops();
    double xmax = 0.0;
    for (int l = 0; l < N; ++l) xmax = std::max(xmax, std::abs(x[l]));
    const double stop = tol * (1.0 + xmax);

    // fixed point on the midpoint y: y <- x + 0.5 F(y)
    std::copy(x.begin(), x.end(), scratch_y_.begin());
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        eval_fast_increment(scratch_y_.data(), scratch_f_.data());
        for (int l = 0; l < N; ++l) scratch_z_[l] = x[l] + 0.5 * scratch_f_[l];
        const double change = k.max_abs_diff(scratch_z_.data(), scratch_y_.data(), N);
        std::swap(scratch_y_, scratch_z_);
        if (!std::isfinite(change)) {
            throw MidpointDiverged("midpoint iteration produced a non-finite state");
        }
        if (change <= stop) {
            // one polishing pass to push the residual below the stop level
            eval_fast_increment(scratch_y_.data(), scratch_f_.data());
            for (int l = 0; l < N; ++l) scratch_y_[l] = x[l] + 0.5 * scratch_f_[l];
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw MidpointDiverged("midpoint iteration did not converge in " +
                               std::to_string(max_iter) + " iterations (dt = " +
                               std::to_string(dt) + ")");
    }
    for (int l = 0; l < N; ++l) x[l] = 2.0 * scratch_y_[l] - x[l];
}

void SdeSimulator::fast_flow(StateVector& x, double window, double dt_target, RngStream& rng,
                             const SimConfig& cfg) const {
    const int n_sub = std::max(1, static_cast<int>(std::ceil(window / dt_target)));
    const double dt = window / n_sub;
    for (int s = 0; s < n_sub; ++s) {
        int halvings = 0;
        double remaining = dt;
        double step = dt;
        while (remaining > 0.0) {
            StateVector save = x;
            try {
                fast_midpoint_step(x, step, rng, cfg.midpoint_tol, cfg.midpoint_max_iter);
                remaining -= step;
                step = std::min(step, remaining);
            } catch (const MidpointDiverged&) {
                x = save;
                if (++halvings > 8) throw;
                step *= 0.5;
            }
        }
    }
}

void SdeSimulator::strang_step(StateVector& x, const SimConfig& cfg, RngStream& rng) const {
    const double dt_fast = std::min(cfg.h, cfg.fast_substep_factor * params_.eps);
    ou_step(x, 0.5 * cfg.h, rng);
    fast_flow(x, cfg.h, dt_fast, rng, cfg);
    ou_step(x, 0.5 * cfg.h, rng);
}

void SdeSimulator::heun_step(StateVector& x, double h, RngStream& rng, bool fast_only) const {
    const int N = spec_.N();
    // noise layout matches the fast substeps: forcing increments first (skipped
    // in fast-only mode), then one increment per stirring field
    std::vector<double> forcing(N, 0.0);
    if (!fast_only) {
        const double sqh = std::sqrt(h);
        for (int l = 0; l < N; ++l) forcing[l] = forcing_amp_[l] * sqh * rng.gaussian();
    }
    fill_fast_weights(h, rng);

    auto full_increment = [&](const double* y, double* out) {
        eval_fast_increment(y, out);  // (h/eps) b + sqrt(kappa/eps) sum Z dB
        if (!fast_only) {
            for (int l = 0; l < N; ++l) {
                out[l] += -spec_.lambda_of(l) * y[l] * h + forcing[l];
            }
        }
    };

    std::vector<double> f0(N), pred(N), f1(N);
    full_increment(x.data(), f0.data());
    for (int l = 0; l < N; ++l) pred[l] = x[l] + f0[l];
    full_increment(pred.data(), f1.data());
    for (int l = 0; l < N; ++l) x[l] += 0.5 * (f0[l] + f1[l]);
    for (double v : x) {
        if (!std::isfinite(v)) throw NonFinite("heun step produced a non-finite state");
    }
}

void SdeSimulator::ito_euler_step(StateVector& x, double h, RngStream& rng) const {
    const int N = spec_.N();
    std::vector<double> forcing(N);
    const double sqh = std::sqrt(h);
    for (int l = 0; l < N; ++l) forcing[l] = forcing_amp_[l] * sqh * rng.gaussian();
    fill_fast_weights(h, rng);

    std::vector<double> incr(N);
    eval_fast_increment(x.data(), incr.data());
    const StateVector corr = ito_correction(stir_, x, params_.kappa, params_.eps, spec_);
    for (int l = 0; l < N; ++l) {
        x[l] += incr[l] + (-spec_.lambda_of(l) * x[l] + corr[l]) * h + forcing[l];
    }
    for (double v : x) {
        if (!std::isfinite(v)) throw NonFinite("ito-euler step produced a non-finite state");
    }
}

StateVector SdeSimulator::draw_stationary(RngStream& rng) const {
    StateVector x(spec_.N());
    const double sd = std::sqrt(0.5 * params_.a);
    for (auto& v : x) v = sd * rng.gaussian();
    return x;
}

PathRecorder SdeSimulator::simulate(const SimConfig& cfg, std::optional<StateVector> x0,
                                    std::uint64_t stream_id) const {
    cfg.validate();
    RngStream rng(cfg.seed, stream_id);
    StateVector x = x0 ? std::move(*x0) : draw_stationary(rng);
    if (cfg.mode == SimMode::FastOnly) {
        double norm = 0.0;
        for (double v : x) norm += v * v;
        if (norm == 0.0) throw ZeroState("fast-only mode needs a nonzero initial state");
    }

    PathRecorder rec;
    const long n_steps = static_cast<long>(std::ceil(cfg.t_end / cfg.h - 1e-12));
    rec.records.reserve(static_cast<std::size_t>(n_steps / cfg.record_stride) + 2);

    auto record = [&](double t) {
        Observables o = compute_observables(x, spec_);
        ObsRecord r;
        r.t = t;
        r.u = o.u;
        r.v = o.v;
        r.t_obs = o.t_obs;
        r.ratio = o.v > 0.0 ? o.u / o.v : 0.0;
        bool good = false;
        if (o.u > 0.0) {
            good = classify_state(x, spec_, cfg.u_min, cfg.u_max, cfg.eta) == StateClass::Good;
        }
        r.good = good;
        r.burn_in = t <= cfg.burn_in;
        rec.records.push_back(r);
        if (cfg.state_stride > 0 &&
            (rec.records.size() - 1) % static_cast<std::size_t>(cfg.state_stride) == 0) {
            rec.state_times.push_back(t);
            rec.states.push_back(x);
        }
    };

    record(0.0);
    const double dt_fast = std::min(cfg.h, cfg.fast_substep_factor * params_.eps);
    for (long k = 1; k <= n_steps; ++k) {
        switch (cfg.mode) {
            case SimMode::Full:
                strang_step(x, cfg, rng);
                break;
            case SimMode::FastOnly:
                fast_flow(x, cfg.h, dt_fast, rng, cfg);
                break;
            case SimMode::Reference:
                heun_step(x, cfg.h, rng);
                break;
        }
        for (double v : x) {
            if (!std::isfinite(v)) {
                throw NonFinite("trajectory became non-finite at t = " + std::to_string(k * cfg.h));
            }
        }
        if (k % cfg.record_stride == 0) record(k * cfg.h);
    }
    return rec;
}

std::vector<PathRecorder> simulate_ensemble(const SdeSimulator& sim, const SimConfig& cfg,
                                            const std::vector<StateVector>& initial_states,
                                            std::uint64_t stream_base, int n_threads) {
    const int n_traj = static_cast<int>(initial_states.size());
    std::vector<PathRecorder> out(n_traj);
    n_threads = std::max(1, std::min(n_threads, n_traj));
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    auto worker = [&]() {
        SdeSimulator local(sim);  // scratch buffers are per-instance, not shareable
        while (true) {
            const int k = next.fetch_add(1);
            if (k >= n_traj) break;
            out[k] =
                local.simulate(cfg, initial_states[k], stream_base + static_cast<std::uint64_t>(k));
        }
    };
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace coneflow
