#pragma once

#include <vector>

#include "coneflow/spectrum.hpp"

namespace coneflow {

// Model parameters: forcing variance scale a, per-pair damping perturbations
// delta (expanded pairwise onto modes), stirring strength kappa, and the
// timescale separation eps.
struct ModelParams {
    double a = 1.0;
    std::vector<double> delta;  // size n, each in (-1, 0]
    double kappa = 0.5;
    double eps = 0.5;

    // throws ValidationError on any constraint violation
    void validate(const Spectrum& s) const;

    double delta_of_mode(int mode) const { return delta[mode / 2]; }

    static ModelParams defaults(const Spectrum& s) {
        ModelParams p;
        p.delta.assign(s.n(), 0.0);
        return p;
    }
};

// Forcing strength summaries: totals and per-mode maxima of the Brownian
// forcing, at weight lambda^0 (b0), lambda^1 (b1) and lambda^-1 (b_minus1).
struct ForcingBudgets {
    double b0;        // a * sum (1+delta_l)
    double b0_prime;  // max_l a (1+delta_l)
    double b1;        // a * sum lambda_l (1+delta_l)
    double b1_prime;  // max_l a lambda_l (1+delta_l)
    double b_minus1;  // a * sum (1+delta_l)/lambda_l
};

ForcingBudgets forcing_budgets(const ModelParams& p, const Spectrum& s);

// Largest z-growth bound usable in the exponential moment inequalities:
// Phi(z,b,b') = sum_{m>=0} z^m/m! * prod_{0<=p<m}(p b' + b/2) * (1 + m b' + b/2),
// summed by term recurrence until the term drops below 1e-16 of the running
// sum (with a 1e6-term cap near the divergence boundary). Requires z*b' < 1.
double phi_bound(double z, double b, double b_prime);

}  // namespace coneflow
