#include "coneflow/effective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coneflow/errors.hpp"

namespace coneflow {

QSource exact_q_source(const Spectrum& s) {
    return [&s](double u, double v, double* q_out) {
        QValues qv = q_values(ConePoint{u, v}, s);
        std::copy(qv.q.begin(), qv.q.end(), q_out);
    };
}

QSource table_q_source(const QRayTable& table) {
    return [&table](double u, double v, double* q_out) { table.eval(u, v, q_out); };
}

EffectiveCoefficients effective_coefficients(const ConePoint& w, const ModelParams& p,
                                             const Spectrum& s, const QSource& q) {
    if (!in_cone(w, s, 1e-12)) {
        throw OutsideCone("effective coefficients requested outside the cone");
    }
    const int N = s.N();
    std::vector<double> qv(N);
    q(w.u, w.v, qv.data());

    const ForcingBudgets b = forcing_budgets(p, s);
    double s_lam_q = 0.0, s_q = 0.0, s_inv_q = 0.0, s_lam_q_plain = 0.0;
    for (int l = 0; l < N; ++l) {
        const double f = (1.0 + p.delta_of_mode(l)) * qv[l];
        s_lam_q += s.lambda_of(l) * f;
        s_q += f;
        s_inv_q += f / s.lambda_of(l);
        s_lam_q_plain += s.lambda_of(l) * qv[l];
    }
    EffectiveCoefficients c;
    c.a11 = 2.0 * p.a * s_lam_q;
    c.a12 = 2.0 * p.a * s_q;
    c.a22 = 2.0 * p.a * s_inv_q;
    c.drift_u = b.b1 - 2.0 * s_lam_q_plain;
    c.drift_v = b.b0 - 2.0 * w.u;  // sum q = u identically
    c.at = w;
    return c;
}

DiffusionFactor diffusion_factor(const EffectiveCoefficients& c) {
    const double g11 = 2.0 * c.a11, g12 = 2.0 * c.a12, g22 = 2.0 * c.a22;
    const double trace = g11 + g22;
    const double tol = 1e-12 * std::max(trace, 1.0);
    if (g11 < -tol || g22 < -tol || g11 * g22 - g12 * g12 < -tol * std::max(trace * trace, 1.0)) {
        throw NotPSD("diffusion matrix is indefinite beyond tolerance at (" +
                     std::to_string(c.at.u) + ", " + std::to_string(c.at.v) + ")");
    }
    DiffusionFactor f;
    if (g11 <= 0.0) {
        f.f11 = 0.0;
        if (std::abs(g12) > tol) {
            throw NotPSD("zero diagonal with nonzero cross term");
        }
        f.f21 = 0.0;
        f.f22 = std::sqrt(std::max(0.0, g22));
        return f;
    }
    f.f11 = std::sqrt(g11);
    f.f21 = g12 / f.f11;
    f.f22 = std::sqrt(std::max(0.0, g22 - f.f21 * f.f21));
    return f;
}

namespace {

ConePoint reflect_into_cone(const ConePoint& w, double lam_n) {
    // reflect across whichever boundary ray is violated
    if (w.u < w.v) {
        return ConePoint{w.v, w.u};  // mirror across u = v
    }
    if (w.u > lam_n * w.v) {
        // mirror across u = lam_n v: normal direction (1, -lam_n)/|.|
        const double nn = 1.0 + lam_n * lam_n;
        const double d = (w.u - lam_n * w.v) / nn;
        return ConePoint{w.u - 2.0 * d, w.v + 2.0 * d * lam_n};
    }
    return w;
}

}  // namespace

ConePoint effective_step(const ConePoint& w, double h, const ModelParams& p, const Spectrum& s,
                         const QSource& q, RngStream& rng, EffStepMeta* meta) {
    if (!in_cone_interior(w, s)) {
        throw OutsideCone("effective step requires an interior starting point");
    }
    const EffectiveCoefficients c = effective_coefficients(w, p, s, q);
    const DiffusionFactor f = diffusion_factor(c);
    const double g1 = rng.gaussian();
    const double g2 = rng.gaussian();

    EffStepMeta local;
    double dt = h;
    ConePoint prop;
    bool ok = false;
    // shorten the move (same proposal direction) when it exits the open cone
    for (int k = 0; k <= 12; ++k) {
        const double sq = std::sqrt(dt);
        prop = ConePoint{w.u + c.drift_u * dt + sq * f.f11 * g1,
                         w.v + c.drift_v * dt + sq * (f.f21 * g1 + f.f22 * g2)};
        if (in_cone_interior(prop, s)) {
            ok = true;
            break;
        }
        if (k < 12) {
            dt *= 0.5;
            ++local.halvings;
        }
    }
    if (!ok) {
        prop = reflect_into_cone(prop, s.lambda_max());
        local.reflected = true;
        if (!in_cone_interior(prop, s)) {
            throw StuckAtBoundary("reflection failed to return the step into the cone at (" +
                                  std::to_string(prop.u) + ", " + std::to_string(prop.v) + ")");
        }
    }
    local.dt_used = dt;
    if (meta) *meta = local;
    return prop;
}

EffectivePath simulate_effective(const SimConfig& cfg, const ModelParams& p, const Spectrum& s,
                                 const QSource& q, std::uint64_t stream_id,
                                 std::optional<ConePoint> w0) {
    cfg.validate();
    RngStream rng(cfg.seed, stream_id);
    const ForcingBudgets b = forcing_budgets(p, s);
    ConePoint w = w0.value_or(ConePoint{0.5 * b.b0,
                                        0.5 * b.b0 * 0.5 * (1.0 + 1.0 / s.lambda_max())});
    if (!in_cone_interior(w, s)) {
        throw OutsideCone("initial point of the effective run must be interior");
    }

    EffectivePath out;
    std::vector<double> qbuf(s.N());

    auto record = [&](double t, bool reflected) {
        q(w.u, w.v, qbuf.data());
        double t_obs = 0.0;
        for (int l = 0; l < s.N(); ++l) t_obs += s.lambda_of(l) * qbuf[l];
        ObsRecord r;
        r.t = t;
        r.u = w.u;
        r.v = w.v;
        r.t_obs = t_obs;
        r.ratio = w.v > 0.0 ? w.u / w.v : 0.0;
        r.reflected = reflected;
        r.burn_in = t <= cfg.burn_in;
        out.recorder.records.push_back(r);
    };

    record(0.0, false);
    double t = 0.0;
    for (long k = 1; t < cfg.t_end; ++k) {
        EffStepMeta meta;
        w = effective_step(w, cfg.h, p, s, q, rng, &meta);
        t += meta.dt_used;  // halved steps advance less than h (rare)
        ++out.total_steps;
        if (meta.reflected) ++out.reflected_steps;
        if (k % cfg.record_stride == 0) record(t, meta.reflected);
    }
    return out;
}

std::optional<AdmissibleExponents> admissible_exponents(const ModelParams& p, const Spectrum& s) {
    double sum1 = 0.0, max1 = 0.0, sum2 = 0.0, max2 = 0.0;
    const double lam_n = s.lambda_max();
    for (int l = 0; l < s.N(); ++l) {
        const double f = 1.0 + p.delta_of_mode(l);
        const double t1 = (s.lambda_of(l) - 1.0) * f;
        const double t2 = (lam_n - s.lambda_of(l)) * f;
        sum1 += t1;
        sum2 += t2;
        max1 = std::max(max1, t1);
        max2 = std::max(max2, t2);
    }
    const double alpha = 0.5 * (sum1 / (2.0 * max1) - 1.0) - 1e-9;
    const double beta = 0.5 * (sum2 / (2.0 * max2) - 1.0) - 1e-9;
    if (alpha <= 0.0 || beta <= 0.0) return std::nullopt;
    return AdmissibleExponents{alpha, beta};
}

}  // namespace coneflow
