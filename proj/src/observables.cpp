#include "coneflow/observables.hpp"

#include <cmath>
#include <string>

#include "coneflow/errors.hpp"
#include "coneflow/kernels.hpp"

namespace coneflow {

Observables compute_observables(const StateVector& x, const Spectrum& s) {
    if (static_cast<int>(x.size()) != s.N()) {
        throw DimensionMismatch("state has " + std::to_string(x.size()) + " modes, spectrum has " +
                                std::to_string(s.N()));
    }
    const auto& k = kernels::ops();
    thread_local std::vector<double> ones;
    if (static_cast<int>(ones.size()) < s.N()) ones.assign(s.N(), 1.0);
    Observables o;
    o.u = k.weighted_sumsq(x.data(), ones.data(), s.N());
    o.v = k.weighted_sumsq(x.data(), s.inv_lambda().data(), s.N());
    o.t_obs = k.weighted_sumsq(x.data(), s.lambda().data(), s.N());
    return o;
}

bool in_cone(const ConePoint& w, const Spectrum& s, double tol) {
    const double slack = tol * std::abs(w.u);
    return w.v >= -slack && w.u >= w.v - slack && w.u <= s.lambda_max() * w.v + slack;
}

bool in_cone_interior(const ConePoint& w, const Spectrum& s) {
    return w.v > 0.0 && w.u > w.v && w.u < s.lambda_max() * w.v;
}

int cone_sector(const ConePoint& w, const Spectrum& s) {
    if (!in_cone(w, s)) throw OutsideCone("(" + std::to_string(w.u) + ", " + std::to_string(w.v) +
                                          ") is not in the cone");
    if (w.v <= 0.0) return 1;
    const double r = w.u / w.v;
    for (int i = 1; i < s.n(); ++i) {
        if (r <= s.mu()[i]) return i + 1;
    }
    return s.n();
}

StateClass classify_state(const StateVector& x, const Spectrum& s, double u_min, double u_max,
                          double eta) {
    const Observables o = compute_observables(x, s);
    if (o.u == 0.0) throw ZeroState("cannot classify the zero state (ratio undefined)");
    if (o.u < u_min || o.u > u_max) return StateClass::Untamed;
    const double ratio = o.u / o.v;
    for (int i = 0; i < s.n(); ++i) {
        if (std::abs(ratio - s.mu()[i]) < eta) return StateClass::Untamed;
    }
    return StateClass::Good;
}

}  // namespace coneflow
