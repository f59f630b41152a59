#include "coneflow/kernels.hpp"

// AVX2 kernel variants. Compiled with -mavx2 (no FMA: fused contractions
// would change rounding relative to the scalar reference). Products are
// evaluated in the same association as the scalar kernels and scatter
// accumulation happens in entry order, so ou_update / apply_quad /
// midpoint_combine / max_abs_diff are bit-identical to the reference.
// weighted_sumsq uses four Kahan lanes and differs from the reference only
// in summation tree, tested to a small ulp tolerance.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace coneflow::kernels {

namespace {

void ou_update_avx2(double* x, const double* decay, const double* amp, const double* z, int n) {
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d dv = _mm256_loadu_pd(decay + i);
        __m256d av = _mm256_loadu_pd(amp + i);
        __m256d zv = _mm256_loadu_pd(z + i);
        __m256d r = _mm256_add_pd(_mm256_mul_pd(dv, xv), _mm256_mul_pd(av, zv));
        _mm256_storeu_pd(x + i, r);
    }
    for (; i < n; ++i) {
        x[i] = decay[i] * x[i] + amp[i] * z[i];
    }
}

void apply_quad_avx2(const QuadTable& t, const double* x, const double* weights, double* out) {
    const std::size_t ne = t.size();
    const std::int32_t* a = t.a.data();
    const std::int32_t* b = t.b.data();
    const std::int32_t* c = t.c.data();
    const std::int32_t* w = t.w.data();
    const double* coef = t.coef.data();
    std::size_t e = 0;
    alignas(32) double prod[4];
    for (; e + 4 <= ne; e += 4) {
        __m128i ia = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + e));
        __m128i ib = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + e));
        __m128i iw = _mm_loadu_si128(reinterpret_cast<const __m128i*>(w + e));
        __m256d xa = _mm256_i32gather_pd(x, ia, 8);
        __m256d xb = _mm256_i32gather_pd(x, ib, 8);
        __m256d cv = _mm256_loadu_pd(coef + e);
        __m256d wv = _mm256_i32gather_pd(weights, iw, 8);
        __m256d p = _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(xa, xb), cv), wv);
        _mm256_store_pd(prod, p);
        // scatter adds stay in entry order (matches the scalar reference)
        out[c[e]] += prod[0];
        out[c[e + 1]] += prod[1];
        out[c[e + 2]] += prod[2];
        out[c[e + 3]] += prod[3];
    }
    for (; e < ne; ++e) {
        out[c[e]] += ((x[a[e]] * x[b[e]]) * coef[e]) * weights[w[e]];
    }
}

double weighted_sumsq_avx2(const double* x, const double* w, int n) {
    __m256d sum = _mm256_setzero_pd();
    __m256d comp = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d xv = _mm256_loadu_pd(x + i);
        __m256d wv = _mm256_loadu_pd(w + i);
        __m256d term = _mm256_mul_pd(_mm256_mul_pd(xv, xv), wv);
        __m256d y = _mm256_sub_pd(term, comp);
        __m256d t = _mm256_add_pd(sum, y);
        comp = _mm256_sub_pd(_mm256_sub_pd(t, sum), y);
        sum = t;
    }
    alignas(32) double lane_sum[4], lane_comp[4];
    _mm256_store_pd(lane_sum, sum);
    _mm256_store_pd(lane_comp, comp);
    double s = 0.0, cmp = 0.0;
    for (int l = 0; l < 4; ++l) {
        double y = (lane_sum[l] - lane_comp[l]) - cmp;
        double t = s + y;
        cmp = (t - s) - y;
        s = t;
    }
    for (; i < n; ++i) {
        double term = (x[i] * x[i]) * w[i];
        double y = term - cmp;
        double t = s + y;
        cmp = (t - s) - y;
        s = t;
    }
    return s;
}

void midpoint_combine_avx2(const double* x, const double* z, double* mid, int n) {
    const __m256d half = _mm256_set1_pd(0.5);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_mul_pd(half, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(z + i)));
        _mm256_storeu_pd(mid + i, r);
    }
    for (; i < n; ++i) {
        mid[i] = 0.5 * (x[i] + z[i]);
    }
}

double max_abs_diff_avx2(const double* a, const double* b, int n) {
    const __m256d signmask = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        m = _mm256_max_pd(m, _mm256_andnot_pd(signmask, d));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, m);
    double r = lanes[0];
    for (int l = 1; l < 4; ++l)
        if (lanes[l] > r) r = lanes[l];
    for (; i < n; ++i) {
        double d = a[i] - b[i];
        if (d < 0) d = -d;
        if (d > r) r = d;
    }
    return r;
}

}  // namespace

bool avx2_available() {
    static const bool ok = __builtin_cpu_supports("avx2");
    return ok;
}

const Ops& avx2_ops() {
    static const Ops ops = {ou_update_avx2, apply_quad_avx2, weighted_sumsq_avx2,
                            midpoint_combine_avx2, max_abs_diff_avx2, "avx2"};
    return ops;
}

const Ops& ops() {
    static const Ops& chosen = avx2_available() ? avx2_ops() : scalar_ops();
    return chosen;
}

}  // namespace coneflow::kernels

#else

namespace coneflow::kernels {

const Ops& ops() { return scalar_ops(); }

}  // namespace coneflow::kernels

#endif
