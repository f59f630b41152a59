#pragma once

#include <optional>
#include <vector>

#include "coneflow/observables.hpp"
#include "coneflow/rng.hpp"
#include "coneflow/spectrum.hpp"

namespace coneflow {

// The pair-radial polytope over a cone point (u,v): the set of
// sigma = (s_3,...,s_n) >= 0 with
//   l1(sigma) = sum (1 - mu_1/mu_i) s_i <= u - mu_1 v   and
//   l2(sigma) = sum (1 - mu_2/mu_i) s_i >= u - mu_2 v.
// The first two radial masses are then determined affinely:
//   (mu_2 - 1) s_1 = -u + mu_2 v + l2(sigma),
//   (mu_2 - 1)/mu_2 s_2 = u - v - l1(sigma).
// On the cone boundary the polytope degenerates to a single point.
struct SectorPolytope {
    double u = 0.0, v = 0.0;
    int dim = 0;                  // n - 2
    bool degenerate = false;      // boundary case: single point
    std::vector<double> point;    // the point when degenerate (size dim)
    std::vector<double> c1, c2;   // constraint coefficients (size dim)
    double r1 = 0.0, r2 = 0.0;    // c1.sigma <= r1, c2.sigma >= r2
    std::vector<double> box_hi;   // implied bounds s_i <= r1/c1_i
    int sector = 1;               // i0 with mu_{i0-1} v < u <= mu_{i0} v
    std::vector<double> mu;       // the eigenvalue ladder (size n)

    double l1(const std::vector<double>& sigma) const;
    double l2(const std::vector<double>& sigma) const;
    bool contains(const std::vector<double>& sigma, double tol = 1e-12) const;

    // radial masses of the first two pairs implied by sigma; throws
    // NegativeRadial if either comes out below -1e-12 * u
    void radial_pair(const std::vector<double>& sigma, double& s1, double& s2) const;

    // a strictly feasible point, constructed from two-pair radial solutions
    std::vector<double> interior_point() const;
};

SectorPolytope build_polytope(const ConePoint& w, const Spectrum& s);

struct VolumeCentroid {
    double volume;
    std::vector<double> centroid;
};

// Exact volume and centroid by vertex enumeration followed by a recursive
// cone-over-facet decomposition. Limited to dim <= 8; larger instances use
// the Monte Carlo path in q_values.
VolumeCentroid volume_centroid(const SectorPolytope& p);

// Uniform sampler. Rejection from the bounding box by default; switches to a
// hit-and-run chain (burn-in 64*dim) when the measured acceptance drops below
// 1e-3.
class PolytopeSampler {
  public:
    explicit PolytopeSampler(const SectorPolytope& p);

    std::vector<double> sample(RngStream& rng);

    bool hit_and_run_engaged() const { return har_; }
    double measured_acceptance() const;
    long long proposals() const { return proposals_; }

  private:
    std::vector<double> rejection_sample(RngStream& rng);
    std::vector<double> har_step(RngStream& rng);

    const SectorPolytope& p_;
    bool har_ = false;
    long long proposals_ = 0;
    long long accepts_ = 0;
    std::vector<double> current_;
};

// Lift a polytope point and pair angles to a state on the fiber over (u,v):
// x_{2i} = sqrt(s_i) cos(theta_i), x_{2i+1} = sqrt(s_i) sin(theta_i).
StateVector lift_sample(const std::vector<double>& sigma, const std::vector<double>& angles,
                        const ConePoint& w, const Spectrum& s);

struct QValues {
    std::vector<double> q;  // size N, pairwise equal
    double volume = 0.0;    // NaN when unavailable (hit-and-run Monte Carlo)
    bool exact = true;
    long long mc_samples = 0;
    std::vector<double> std_errors;  // empty for the exact path
};

struct MonteCarloTag {
    long long samples;
};

// Averaged squared modes over the fiber. The exact path pushes the polytope
// centroid through the affine radial map; boundary points return the closed
// forms (mass u/2 on the lowest or highest pair).
QValues q_values(const ConePoint& w, const Spectrum& s);
QValues q_values(const ConePoint& w, const Spectrum& s, const MonteCarloTag& mc, RngStream& rng);

// Ray table: q along v = 1 for a grid of ratios in [1, lambda_N], exploiting
// first-order homogeneity; full q recovered by scaling. Also the fast lookup
// backend for the effective diffusion.
class QRayTable {
  public:
    QRayTable(const Spectrum& s, std::vector<double> ratios);
    static QRayTable uniform(const Spectrum& s, int grid_size);

    const std::vector<double>& ratios() const { return ratios_; }
    const std::vector<double>& row(int i) const { return rows_[i]; }
    int sector(int i) const { return sectors_[i]; }
    double volume(int i) const { return volumes_[i]; }

    // q(u,v) by linear interpolation in the ratio and homogeneous scaling
    void eval(double u, double v, double* q_out) const;

  private:
    const Spectrum* spec_;
    std::vector<double> ratios_;
    std::vector<std::vector<double>> rows_;
    std::vector<int> sectors_;
    std::vector<double> volumes_;
};

}  // namespace coneflow
