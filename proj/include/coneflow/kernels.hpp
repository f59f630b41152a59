#pragma once

#include <cstdint>
#include <vector>

namespace coneflow::kernels {

// Flattened quadratic interaction table, structure-of-arrays so the vector
// kernels can load coefficients contiguously. Entry semantics:
//   out[c[e]] += ((x[a[e]] * x[b[e]]) * coef[e]) * weights[w[e]]
// The multiply association is fixed; scalar and SIMD variants must produce
// bit-identical results, which the equivalence tests assert.
struct QuadTable {
    std::vector<std::int32_t> a, b, c, w;
    std::vector<double> coef;

    std::size_t size() const { return coef.size(); }
    void push(std::int32_t ia, std::int32_t ib, std::int32_t ic, std::int32_t iw, double v) {
        a.push_back(ia);
        b.push_back(ib);
        c.push_back(ic);
        w.push_back(iw);
        coef.push_back(v);
    }
};

// Linear entries (used for the rotation fields): out[c] += (x[a]*coef)*weights[w].
struct LinTable {
    std::vector<std::int32_t> a, c, w;
    std::vector<double> coef;

    std::size_t size() const { return coef.size(); }
    void push(std::int32_t ia, std::int32_t ic, std::int32_t iw, double v) {
        a.push_back(ia);
        c.push_back(ic);
        w.push_back(iw);
        coef.push_back(v);
    }
};

struct Ops {
    // x[i] = decay[i]*x[i] + amp[i]*z[i]
    void (*ou_update)(double* x, const double* decay, const double* amp, const double* z, int n);
    // accumulate quadratic entries into out (out is not zeroed here)
    void (*apply_quad)(const QuadTable& t, const double* x, const double* weights, double* out);
    // Kahan-compensated sum of w[i]*x[i]^2
    double (*weighted_sumsq)(const double* x, const double* w, int n);
    // mid[i] = 0.5*(x[i]+z[i])
    void (*midpoint_combine)(const double* x, const double* z, double* mid, int n);
    // max_i |a[i]-b[i]|
    double (*max_abs_diff)(const double* a, const double* b, int n);
    const char* name;
};

// Scalar reference kernels: always available, used as the equivalence oracle.
const Ops& scalar_ops();

// Best kernels for this machine, chosen once at first use (AVX2 when the CPU
// and OS support it, scalar otherwise).
const Ops& ops();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_available();
const Ops& avx2_ops();
#endif

void apply_lin(const LinTable& t, const double* x, const double* weights, double* out);

}  // namespace coneflow::kernels
