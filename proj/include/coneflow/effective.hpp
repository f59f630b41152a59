#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "coneflow/observables.hpp"
#include "coneflow/params.hpp"
#include "coneflow/polytope.hpp"
#include "coneflow/rng.hpp"
#include "coneflow/sim.hpp"
#include "coneflow/spectrum.hpp"

namespace coneflow {

// Coefficients of the limit generator at a cone point, written as
//   a11 d2_u + 2 a12 d2_uv + a22 d2_v + drift_u d_u + drift_v d_v.
struct EffectiveCoefficients {
    double a11, a12, a22;
    double drift_u, drift_v;
    ConePoint at;

    double determinant() const { return a11 * a22 - a12 * a12; }
};

// q lookup used by the effective dynamics; either an exact per-call
// evaluation or a ray table with interpolation.
using QSource = std::function<void(double u, double v, double* q_out)>;

QSource exact_q_source(const Spectrum& s);
QSource table_q_source(const QRayTable& table);

EffectiveCoefficients effective_coefficients(const ConePoint& w, const ModelParams& p,
                                             const Spectrum& s, const QSource& q);

// Lower-triangular factor F with F F^T = 2 A, the generator-to-equation
// convention for the second-order part above. Near-degenerate minors are
// clamped at zero; genuine indefiniteness throws NotPSD.
struct DiffusionFactor {
    double f11, f21, f22;
};

DiffusionFactor diffusion_factor(const EffectiveCoefficients& c);

struct EffStepMeta {
    int halvings = 0;
    bool reflected = false;
    double dt_used = 0.0;  // the step advances this much model time
};

// One Euler-Maruyama step of the cone diffusion. A proposal that exits the
// open cone is retried with halved step (same draw, up to 12 times); if it
// still exits it is reflected across the violated boundary ray and flagged.
// The time actually advanced is reported in the metadata.
ConePoint effective_step(const ConePoint& w, double h, const ModelParams& p, const Spectrum& s,
                         const QSource& q, RngStream& rng, EffStepMeta* meta = nullptr);

struct EffectivePath {
    PathRecorder recorder;       // t_obs column carries sum_l lambda_l q_l(W)
    long long reflected_steps = 0;
    long long total_steps = 0;
};

EffectivePath simulate_effective(const SimConfig& cfg, const ModelParams& p, const Spectrum& s,
                                 const QSource& q, std::uint64_t stream_id,
                                 std::optional<ConePoint> w0 = std::nullopt);

struct AdmissibleExponents {
    double alpha_max;
    double beta_max;
};

// Largest boundary-moment exponents admitted by the strict spectral-gap
// inequalities, with a 1e-9 margin; nullopt when no positive exponent works.
std::optional<AdmissibleExponents> admissible_exponents(const ModelParams& p, const Spectrum& s);

}  // namespace coneflow
