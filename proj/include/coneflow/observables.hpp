#pragma once

#include <vector>

#include "coneflow/spectrum.hpp"

namespace coneflow {

using StateVector = std::vector<double>;

// The three quadratic observables of a state: u = sum x_l^2 (enstrophy),
// v = sum x_l^2/lambda_l (energy), t_obs = sum lambda_l x_l^2. For nonzero x
// they satisfy v <= u <= lambda_N v and u <= t_obs <= lambda_N u.
struct Observables {
    double u;
    double v;
    double t_obs;
};

// Compensated (Kahan) accumulation; the ordering chain above is used as a
// tight test assertion downstream.
Observables compute_observables(const StateVector& x, const Spectrum& s);

// Point in the enstrophy-energy cone {0 <= v <= u <= lambda_N v}.
struct ConePoint {
    double u;
    double v;
};

bool in_cone(const ConePoint& w, const Spectrum& s, double tol = 0.0);
bool in_cone_interior(const ConePoint& w, const Spectrum& s);

// Sector index i0 (1-based) with mu_{i0-1} v < u <= mu_{i0} v for interior
// points; returns 1 on the lower boundary ray.
int cone_sector(const ConePoint& w, const Spectrum& s);

enum class StateClass { Good, Untamed };

// A state is Good when its enstrophy is within [u_min, u_max] and the ratio
// u/v keeps distance at least eta from every eigenvalue; otherwise Untamed.
// The partition is exhaustive for nonzero states.
StateClass classify_state(const StateVector& x, const Spectrum& s, double u_min, double u_max,
                          double eta);

}  // namespace coneflow
