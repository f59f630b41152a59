#include "coneflow/fields.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "coneflow/errors.hpp"
#include "coneflow/rng.hpp"

namespace coneflow {

namespace {

// exponential decomposition of cos/sin and their derivatives:
// factor(theta) = sum_{s=+-1} coef(s) * exp(i s theta)
struct TrigFactor {
    std::complex<double> plus, minus;
};

TrigFactor trig(bool is_sin) {
    if (is_sin) return {std::complex<double>(0.0, -0.5), std::complex<double>(0.0, 0.5)};
    return {std::complex<double>(0.5, 0.0), std::complex<double>(0.5, 0.0)};
}

TrigFactor trig_derivative(bool is_sin) {
    // d/dtheta: cos -> -sin, sin -> cos
    if (is_sin) return trig(false);
    TrigFactor f = trig(true);
    return {-f.plus, -f.minus};
}

double cross(const std::array<double, 2>& p, const std::array<double, 2>& q) {
    return p[0] * q[1] - p[1] * q[0];
}

}  // namespace

double TriadTensor::value(int a, int b, int c) const {
    if (a == b || b == c || a == c) return 0.0;
    int s[3] = {a, b, c};
    // sort the triple, tracking permutation sign
    double sign = 1.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2 - i; ++j) {
            if (s[j] > s[j + 1]) {
                std::swap(s[j], s[j + 1]);
                sign = -sign;
            }
        }
    }
    for (const auto& tr : triples_) {
        if (tr.a == s[0] && tr.b == s[1] && tr.c == s[2]) return sign * tr.t;
    }
    return 0.0;
}

TriadTensor galerkin_triads(const Spectrum& s) {
    const auto& src = s.torus_source();  // throws NotTorusSourced
    const int n = s.n();
    const double area = 4.0 * M_PI * M_PI * src.aspect;
    const double norm = std::sqrt(2.0 / area);

    TriadTensor::ModeBasis basis;
    basis.aspect = src.aspect;
    basis.wavevector.resize(s.N());
    basis.is_sin.resize(s.N());
    std::vector<std::array<double, 2>> freq(n);
    for (int i = 0; i < n; ++i) {
        freq[i] = {static_cast<double>(src.wavevectors[i][0]) / src.aspect,
                   static_cast<double>(src.wavevectors[i][1])};
        basis.wavevector[2 * i] = src.wavevectors[i];
        basis.wavevector[2 * i + 1] = src.wavevectors[i];
        basis.is_sin[2 * i] = false;
        basis.is_sin[2 * i + 1] = true;
    }

    auto mode_k = [&](int mode) { return src.wavevectors[mode / 2]; };
    auto mode_freq = [&](int mode) { return freq[mode / 2]; };
    auto mode_sin = [&](int mode) { return mode % 2 == 1; };

    std::vector<TriadTensor::Triple> triples;
    // only triples drawn from three distinct wavevector pairs can couple
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                for (int ta = 0; ta < 2; ++ta) {
                    for (int tb = 0; tb < 2; ++tb) {
                        for (int tc = 0; tc < 2; ++tc) {
                            const int a = 2 * i + ta, b = 2 * j + tb, c = 2 * k + tc;
                            const double cr = cross(mode_freq(a), mode_freq(b));
                            if (cr == 0.0) continue;
                            const TrigFactor fa = trig_derivative(mode_sin(a));
                            const TrigFactor fb = trig_derivative(mode_sin(b));
                            const TrigFactor fc = trig(mode_sin(c));
                            const auto ka = mode_k(a), kb = mode_k(b), kc = mode_k(c);
                            std::complex<double> integral(0.0, 0.0);
                            for (int sa = -1; sa <= 1; sa += 2) {
                                for (int sb = -1; sb <= 1; sb += 2) {
                                    for (int sc = -1; sc <= 1; sc += 2) {
                                        if (sa * ka[0] + sb * kb[0] + sc * kc[0] != 0) continue;
                                        if (sa * ka[1] + sb * kb[1] + sc * kc[1] != 0) continue;
                                        integral += (sa > 0 ? fa.plus : fa.minus) *
                                                    (sb > 0 ? fb.plus : fb.minus) *
                                                    (sc > 0 ? fc.plus : fc.minus);
                                    }
                                }
                            }
                            if (std::abs(integral.real()) < 1e-15) continue;
                            const double t =
                                0.5 * norm * norm * norm * cr * integral.real() * area;
                            triples.push_back({a, b, c, t});
                        }
                    }
                }
            }
        }
    }
    return TriadTensor(std::move(triples), s.N(), std::move(basis));
}

TriadTensor synthetic_triads(std::uint64_t seed, double density, double magnitude,
                             const Spectrum& s) {
    if (!(density > 0.0) || density > 1.0) {
        throw ValidationError("density", "must lie in (0, 1]");
    }
    if (!(magnitude > 0.0)) {
        throw ValidationError("magnitude", "must be positive");
    }
    RngStream rng(seed, 0);
    std::vector<TriadTensor::Triple> triples;
    const int n = s.n();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                for (int ta = 0; ta < 2; ++ta) {
                    for (int tb = 0; tb < 2; ++tb) {
                        for (int tc = 0; tc < 2; ++tc) {
                            const double keep = rng.uniform();
                            const double val = magnitude * (2.0 * rng.uniform() - 1.0);
                            if (keep >= density) continue;
                            triples.push_back({2 * i + ta, 2 * j + tb, 2 * k + tc, val});
                        }
                    }
                }
            }
        }
    }
    return TriadTensor(std::move(triples), s.N());
}

StateVector eval_drift(const TriadTensor& t, const StateVector& x, const Spectrum& s) {
    if (static_cast<int>(x.size()) != s.N() || t.n_modes() != s.N()) {
        throw DimensionMismatch("drift evaluation: state/tensor/spectrum sizes disagree");
    }
    const auto& il = s.inv_lambda();
    StateVector out(x.size(), 0.0);
    for (const auto& tr : t.triples()) {
        const double dab = il[tr.a] - il[tr.b];
        const double dac = il[tr.a] - il[tr.c];
        const double dbc = il[tr.b] - il[tr.c];
        // ordered pairs (a,b) and (b,a) contribute equally, hence the factor 2
        out[tr.c] += 2.0 * x[tr.a] * x[tr.b] * dab * tr.t;
        out[tr.b] -= 2.0 * x[tr.a] * x[tr.c] * dac * tr.t;
        out[tr.a] += 2.0 * x[tr.b] * x[tr.c] * dbc * tr.t;
    }
    return out;
}

StirringFamily::StirringFamily(const Spectrum& s) : n_rotations_(s.n()) {
    const int N = s.N();
    for (int k = 0; k < N; ++k) {
        for (int l = k + 1; l < N; ++l) {
            if (s.pair_of(l) == s.pair_of(k)) continue;
            for (int m = l + 1; m < N; ++m) {
                if (s.pair_of(m) == s.pair_of(l)) continue;
                triples_.push_back({k, l, m});
            }
        }
    }
}

StateVector eval_stirring(const StirringFamily& f, int m, const StateVector& x,
                          const Spectrum& s) {
    if (m < 1 || m > f.M()) {
        throw IndexOutOfRange("stirring index " + std::to_string(m) + " outside [1, " +
                              std::to_string(f.M()) + "]");
    }
    if (static_cast<int>(x.size()) != s.N()) {
        throw DimensionMismatch("stirring evaluation: state size disagrees with spectrum");
    }
    StateVector out(x.size(), 0.0);
    const int n_triples = static_cast<int>(f.triples().size());
    if (m <= n_triples) {
        const auto& J = f.triples()[m - 1];
        const auto& il = s.inv_lambda();
        const double d01 = il[J[0]] - il[J[1]];
        const double d12 = il[J[1]] - il[J[2]];
        const double d20 = il[J[2]] - il[J[0]];
        out[J[2]] += x[J[0]] * x[J[1]] * d01;
        out[J[0]] += x[J[1]] * x[J[2]] * d12;
        out[J[1]] += x[J[2]] * x[J[0]] * d20;
    } else {
        const int p = m - n_triples - 1;
        out[2 * p] = x[2 * p + 1];
        out[2 * p + 1] = -x[2 * p];
    }
    return out;
}

StateVector ito_correction(const StirringFamily& f, const StateVector& x, double kappa,
                           double eps, const Spectrum& s) {
    if (static_cast<int>(x.size()) != s.N()) {
        throw DimensionMismatch("ito correction: state size disagrees with spectrum");
    }
    const auto& il = s.inv_lambda();
    StateVector out(x.size(), 0.0);
    for (const auto& J : f.triples()) {
        const double d01 = il[J[0]] - il[J[1]];
        const double d12 = il[J[1]] - il[J[2]];
        const double d20 = il[J[2]] - il[J[0]];
        const double x0 = x[J[0]], x1 = x[J[1]], x2 = x[J[2]];
        out[J[2]] += d01 * x2 * (x1 * x1 * d12 + x0 * x0 * d20);
        out[J[0]] += d12 * x0 * (x2 * x2 * d20 + x1 * x1 * d01);
        out[J[1]] += d20 * x1 * (x0 * x0 * d01 + x2 * x2 * d12);
    }
    for (int p = 0; p < f.n_rotations(); ++p) {
        out[2 * p] -= x[2 * p];
        out[2 * p + 1] -= x[2 * p + 1];
    }
    const double scale = 0.5 * kappa / eps;
    for (auto& v : out) v *= scale;
    return out;
}

MinRankResult stirring_min_rank(const StirringFamily& f, const StateVector& x,
                                const Spectrum& s) {
    const int N = s.N();
    Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), N);
    const double xn2 = xv.squaredNorm();
    if (xn2 == 0.0) throw ZeroState("min-rank diagnostic undefined at the zero state");

    Eigen::VectorXd lx(N);
    for (int l = 0; l < N; ++l) lx(l) = x[l] * s.inv_lambda()[l];

    // orthonormalize {x, Lambda^{-1}x}; detect the colinear (single-eigenvalue
    // support) case and fall back to the (N-1)-dimensional complement
    Eigen::VectorXd q1 = xv / std::sqrt(xn2);
    Eigen::VectorXd w = lx - q1.dot(lx) * q1;
    const bool degenerate = w.norm() <= 1e-10 * lx.norm();

    const int span_dim = degenerate ? 1 : 2;
    Eigen::MatrixXd span(N, span_dim);
    span.col(0) = q1;
    if (!degenerate) span.col(1) = w / w.norm();

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
    Eigen::MatrixXd Qfull = qr.householderQ();
    Eigen::MatrixXd complement = Qfull.rightCols(N - span_dim);

    const int M = f.M();
    Eigen::MatrixXd rows(M, N);
    const int n_triples = static_cast<int>(f.triples().size());
    for (int m = 1; m <= M; ++m) {
        StateVector z = eval_stirring(f, m, x, s);
        const double scale = (m <= n_triples) ? 1.0 / xn2 : 1.0 / std::sqrt(xn2);
        for (int l = 0; l < N; ++l) rows(m - 1, l) = z[l] * scale;
    }
    Eigen::MatrixXd proj = rows * complement;
    Eigen::MatrixXd gram = proj.transpose() * proj;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    return {es.eigenvalues().minCoeff(), degenerate};
}

FastFieldTable FastFieldTable::build(const TriadTensor& t, const StirringFamily& f,
                                     const Spectrum& s) {
    FastFieldTable table;
    const auto& il = s.inv_lambda();
    for (const auto& tr : t.triples()) {
        const double dab = il[tr.a] - il[tr.b];
        const double dac = il[tr.a] - il[tr.c];
        const double dbc = il[tr.b] - il[tr.c];
        table.quad.push(tr.a, tr.b, tr.c, 0, 2.0 * dab * tr.t);
        table.quad.push(tr.a, tr.c, tr.b, 0, -2.0 * dac * tr.t);
        table.quad.push(tr.b, tr.c, tr.a, 0, 2.0 * dbc * tr.t);
    }
    const int n_triples = static_cast<int>(f.triples().size());
    for (int m = 1; m <= n_triples; ++m) {
        const auto& J = f.triples()[m - 1];
        const double d01 = il[J[0]] - il[J[1]];
        const double d12 = il[J[1]] - il[J[2]];
        const double d20 = il[J[2]] - il[J[0]];
        table.quad.push(J[0], J[1], J[2], m, d01);
        table.quad.push(J[1], J[2], J[0], m, d12);
        table.quad.push(J[2], J[0], J[1], m, d20);
    }
    for (int p = 0; p < f.n_rotations(); ++p) {
        const int m = n_triples + 1 + p;
        table.lin.push(2 * p + 1, 2 * p, m, 1.0);
        table.lin.push(2 * p, 2 * p + 1, m, -1.0);
    }
    table.n_weights = 1 + f.M();
    return table;
}

}  // namespace coneflow
