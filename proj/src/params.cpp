#include "coneflow/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coneflow/errors.hpp"

namespace coneflow {

void ModelParams::validate(const Spectrum& s) const {
    if (!(a > 0.0)) {
        throw ValidationError("params.a", "forcing variance scale must be positive");
    }
    if (static_cast<int>(delta.size()) != s.n()) {
        throw ValidationError("params.delta", "need one value per eigenvalue pair (" +
                                                  std::to_string(s.n()) + "), got " +
                                                  std::to_string(delta.size()));
    }
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(delta[i] > -1.0) || delta[i] > 0.0) {
            throw ValidationError("params.delta[" + std::to_string(i) + "]",
                                  "damping perturbation must lie in (-1, 0]");
        }
    }
    if (!(kappa > 0.0) || kappa > 1.0) {
        throw ValidationError("params.kappa", "stirring strength must lie in (0, 1]");
    }
    if (!(eps > 0.0)) {
        throw ValidationError("params.eps", "timescale parameter must be positive");
    }
}

ForcingBudgets forcing_budgets(const ModelParams& p, const Spectrum& s) {
    ForcingBudgets b{0.0, 0.0, 0.0, 0.0, 0.0};
    for (int l = 0; l < s.N(); ++l) {
        const double f = p.a * (1.0 + p.delta_of_mode(l));
        const double lam = s.lambda_of(l);
        b.b0 += f;
        b.b1 += lam * f;
        b.b_minus1 += f / lam;
        b.b0_prime = std::max(b.b0_prime, f);
        b.b1_prime = std::max(b.b1_prime, lam * f);
    }
    return b;
}

double phi_bound(double z, double b, double b_prime) {
    if (z < 0.0 || b <= 0.0 || b_prime <= 0.0) {
        throw ValidationError("phi_bound", "requires z >= 0 and positive b, b'");
    }
    if (z * b_prime >= 1.0) {
        throw DivergentSeries("series diverges for z*b' >= 1 (z*b' = " +
                              std::to_string(z * b_prime) + ")");
    }
    const double half_b = 0.5 * b;
    // term_m = z^m/m! * prod_{0<=p<m}(p b' + b/2); recurrence
    // term_{m+1} = term_m * z * (m b' + b/2) / (m+1)
    double term = 1.0;
    double sum = term * (1.0 + half_b);
    for (long m = 0; m < 1000000; ++m) {
        term *= z * (static_cast<double>(m) * b_prime + half_b) / static_cast<double>(m + 1);
        const double contrib = term * (1.0 + static_cast<double>(m + 1) * b_prime + half_b);
        sum += contrib;
        if (contrib < 1e-16 * sum) break;
    }
    return sum;
}

}  // namespace coneflow
