#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "coneflow/kernels.hpp"
#include "coneflow/observables.hpp"
#include "coneflow/spectrum.hpp"

namespace coneflow {

// Coupling coefficients t_{a,b,c} of the quadratic drift, stored once per
// unordered triple a < b < c; all six orderings follow from
//   t_{a,b,c} = -t_{b,a,c} and t_{a,b,c} = t_{c,a,b},
// so antisymmetry and cyclicity hold exactly by construction.
class TriadTensor {
  public:
    struct Triple {
        int a, b, c;  // 0-based modes, a < b < c
        double t;
    };

    struct ModeBasis {
        double aspect = 0.0;
        // per mode: wavevector and cos/sin tag (cos first within each pair)
        std::vector<std::array<int, 2>> wavevector;
        std::vector<bool> is_sin;
    };

    TriadTensor(std::vector<Triple> triples, int n_modes)
        : triples_(std::move(triples)), n_modes_(n_modes) {}
    TriadTensor(std::vector<Triple> triples, int n_modes, ModeBasis basis)
        : triples_(std::move(triples)), n_modes_(n_modes), basis_(std::move(basis)) {}

    const std::vector<Triple>& triples() const { return triples_; }
    int n_modes() const { return n_modes_; }
    const ModeBasis& basis() const { return basis_; }

    // signed lookup for arbitrary index order; zero when not stored
    double value(int a, int b, int c) const;

  private:
    std::vector<Triple> triples_;
    int n_modes_;
    ModeBasis basis_;
};

// Analytic triad coefficients t_{a,b,c} = (1/2) <det(grad phi_a, grad phi_b), phi_c>
// for the L2-normalized cos/sin eigenfunctions on the thin torus, evaluated by
// exponential decomposition: a product of three trigonometric factors
// integrates to a nonzero value only when the signed integer wavevectors
// cancel. The result is exact up to rounding.
TriadTensor galerkin_triads(const Spectrum& s);

// Random antisymmetric/cyclic tensor on distinct-eigenvalue triples; the
// conservation identities hold for any coefficient values, so this provides a
// drift without a torus. Deterministic in the seed.
TriadTensor synthetic_triads(std::uint64_t seed, double density, double magnitude,
                             const Spectrum& s);

// b(x)_l = sum_{a,b} x_a x_b (1/lambda_a - 1/lambda_b) t_{a,b,l}
StateVector eval_drift(const TriadTensor& t, const StateVector& x, const Spectrum& s);

// Stirring family: all triples (k,l,m) with strictly increasing eigenvalues,
// in lexicographic order, followed by the n in-pair rotation generators.
class StirringFamily {
  public:
    explicit StirringFamily(const Spectrum& s);

    const std::vector<std::array<int, 3>>& triples() const { return triples_; }
    int n_rotations() const { return n_rotations_; }
    int M() const { return static_cast<int>(triples_.size()) + n_rotations_; }

  private:
    std::vector<std::array<int, 3>> triples_;
    int n_rotations_;
};

// Z_m(x): the m-th stirring field (1-based m in [1, M]); triple fields first,
// then rotations.
StateVector eval_stirring(const StirringFamily& f, int m, const StateVector& x, const Spectrum& s);

// (kappa/2eps) * sum_m (DZ_m)(x) Z_m(x), the Stratonovich-to-Ito drift
// conversion, with the Jacobians expanded analytically from the quadratic and
// linear field structure.
StateVector ito_correction(const StirringFamily& f, const StateVector& x, double kappa, double eps,
                           const Spectrum& s);

struct MinRankResult {
    double value;                // smallest eigenvalue of the projected Gram form
    bool degenerate_complement;  // x and Lambda^{-1} x colinear; complement is (N-1)-dim
};

// Smallest value over unit z orthogonal to x in both inner products of
// sum_J <T_J(x),z>^2/|x|^4 + sum_i <R_i(x),z>^2/|x|^2. Positive values certify
// that the stirring acts elliptically on the fiber through x.
MinRankResult stirring_min_rank(const StirringFamily& f, const StateVector& x, const Spectrum& s);

// Flattened evaluation table for the fast fields: slot 0 of the weight vector
// drives the drift, slots 1..M the stirring fields. Feeding weights
// (dt/eps, sqrt(kappa/eps)*dB_1, ..., sqrt(kappa/eps)*dB_M) yields the full
// fast increment in one kernel pass.
struct FastFieldTable {
    kernels::QuadTable quad;
    kernels::LinTable lin;
    int n_weights = 0;  // 1 + M

    static FastFieldTable build(const TriadTensor& t, const StirringFamily& f, const Spectrum& s);

    void apply(const double* x, const double* weights, double* out) const {
        const auto& k = kernels::ops();
        k.apply_quad(quad, x, weights, out);
        kernels::apply_lin(lin, x, weights, out);
    }
};

}  // namespace coneflow
