#include "coneflow/kernels.hpp"

// Scalar reference kernels. These define the numerical contract: the SIMD
// variants must match them bit-for-bit for the elementwise/entrywise kernels
// and to a few ulp for the compensated reductions. Keep the operation order
// here in sync with kernels_avx2.cpp.

namespace coneflow::kernels {

namespace {

void ou_update_scalar(double* x, const double* decay, const double* amp, const double* z, int n) {
    for (int i = 0; i < n; ++i) {
        x[i] = decay[i] * x[i] + amp[i] * z[i];
    }
}

void apply_quad_scalar(const QuadTable& t, const double* x, const double* weights, double* out) {
    const std::size_t ne = t.size();
    const std::int32_t* a = t.a.data();
    const std::int32_t* b = t.b.data();
    const std::int32_t* c = t.c.data();
    const std::int32_t* w = t.w.data();
    const double* coef = t.coef.data();
    for (std::size_t e = 0; e < ne; ++e) {
        out[c[e]] += ((x[a[e]] * x[b[e]]) * coef[e]) * weights[w[e]];
    }
}

double weighted_sumsq_scalar(const double* x, const double* w, int n) {
    double sum = 0.0, comp = 0.0;
    for (int i = 0; i < n; ++i) {
        double term = (x[i] * x[i]) * w[i];
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

void midpoint_combine_scalar(const double* x, const double* z, double* mid, int n) {
    for (int i = 0; i < n; ++i) {
        mid[i] = 0.5 * (x[i] + z[i]);
    }
}

double max_abs_diff_scalar(const double* a, const double* b, int n) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        if (d < 0) d = -d;
        if (d > m) m = d;
    }
    return m;
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops = {ou_update_scalar, apply_quad_scalar, weighted_sumsq_scalar,
                            midpoint_combine_scalar, max_abs_diff_scalar, "scalar"};
    return ops;
}

void apply_lin(const LinTable& t, const double* x, const double* weights, double* out) {
    const std::size_t ne = t.size();
    for (std::size_t e = 0; e < ne; ++e) {
        out[t.c[e]] += (x[t.a[e]] * t.coef[e]) * weights[t.w[e]];
    }
}

}  // namespace coneflow::kernels
