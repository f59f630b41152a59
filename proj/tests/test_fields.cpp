#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "coneflow/errors.hpp"
#include "coneflow/fields.hpp"
#include "coneflow/observables.hpp"
#include "coneflow/rng.hpp"
#include "coneflow/spectrum.hpp"

using namespace coneflow;

namespace {

Spectrum desk_spectrum() { return Spectrum::torus(0.7, {{0, 1}, {1, 0}, {1, 1}, {0, 2}}); }

// 256x256 tensor-product rectangle rule over the torus; exact for the
// trigonometric polynomials appearing in the triad integrals
double triad_quadrature(const Spectrum& s, int a, int b, int c) {
    const auto& src = s.torus_source();
    const double aspect = src.aspect;
    const double area = 4.0 * M_PI * M_PI * aspect;
    const double norm = std::sqrt(2.0 / area);
    const int G = 256;
    const double Lx = 2.0 * M_PI * aspect;
    const double Ly = 2.0 * M_PI;

    auto freq = [&](int mode) {
        const auto& k = src.wavevectors[mode / 2];
        return std::array<double, 2>{k[0] / aspect, static_cast<double>(k[1])};
    };
    auto phi = [&](int mode, double px, double py) {
        const auto f = freq(mode);
        const double th = f[0] * px + f[1] * py;
        return norm * ((mode % 2) ? std::sin(th) : std::cos(th));
    };
    auto dphi = [&](int mode, double px, double py) {
        const auto f = freq(mode);
        const double th = f[0] * px + f[1] * py;
        const double g = (mode % 2) ? std::cos(th) : -std::sin(th);
        return std::array<double, 2>{norm * g * f[0], norm * g * f[1]};
    };

    double sum = 0.0;
    for (int i = 0; i < G; ++i) {
        const double px = Lx * i / G;
        for (int j = 0; j < G; ++j) {
            const double py = Ly * j / G;
            const auto ga = dphi(a, px, py);
            const auto gb = dphi(b, px, py);
            const double det = ga[0] * gb[1] - ga[1] * gb[0];
            sum += det * phi(c, px, py);
        }
    }
    return 0.5 * sum * (Lx / G) * (Ly / G);
}

StateVector random_state(RngStream& rng, int n, double scale = 1.0) {
    StateVector x(n);
    for (auto& v : x) v = scale * rng.gaussian();
    return x;
}

double dot(const StateVector& a, const StateVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double dot_minus1(const StateVector& a, const StateVector& b, const Spectrum& s) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i] * s.inv_lambda()[i];
    return r;
}

double norm(const StateVector& a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST_CASE("triad tensor structure on the desk torus") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t = galerkin_triads(s);

    // only pairs {(0,1),(1,0),(1,1)} close a wavevector triangle; modes 7,8
    // attached to (0,2) never couple
    std::set<int> touched;
    for (const auto& tr : t.triples()) {
        touched.insert(tr.a);
        touched.insert(tr.b);
        touched.insert(tr.c);
        CHECK(tr.a < tr.b);
        CHECK(tr.b < tr.c);
    }
    CHECK(touched.count(6) == 0);
    CHECK(touched.count(7) == 0);
    CHECK(!t.triples().empty());

    // antisymmetry and cyclicity of the signed lookup, by construction
    for (const auto& tr : t.triples()) {
        CHECK(t.value(tr.a, tr.b, tr.c) == tr.t);
        CHECK(t.value(tr.b, tr.a, tr.c) == -tr.t);
        CHECK(t.value(tr.c, tr.a, tr.b) == tr.t);
        CHECK(t.value(tr.b, tr.c, tr.a) == tr.t);
        CHECK(t.value(tr.a, tr.c, tr.b) == -tr.t);
        CHECK(t.value(tr.c, tr.b, tr.a) == -tr.t);
    }
    // same-slot and same-pair entries vanish
    CHECK(t.value(0, 0, 4) == 0.0);
    CHECK(t.value(0, 1, 4) == 0.0);
}

TEST_CASE("triad values match the quadrature oracle") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t = galerkin_triads(s);
    // every stored analytic value against the 2-d quadrature
    for (const auto& tr : t.triples()) {
        const double q = triad_quadrature(s, tr.a, tr.b, tr.c);
        CHECK(std::abs(q - tr.t) <= 1e-8);
    }
    // and a sweep over all unordered triples confirms no missing entries
    for (int a = 0; a < 8; ++a) {
        for (int b = a + 1; b < 8; ++b) {
            for (int c = b + 1; c < 8; ++c) {
                const double q = triad_quadrature(s, a, b, c);
                CHECK(std::abs(q - t.value(a, b, c)) <= 1e-8);
            }
        }
    }
}

TEST_CASE("drift conservation identities") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t = galerkin_triads(s);
    RngStream rng(2024, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const StateVector x = random_state(rng, 8, 2.0);
        const StateVector b = eval_drift(t, x, s);
        const double nx = norm(x);
        const double bound = 1e-10 * (1.0 + nx * nx * nx);
        CHECK(std::abs(dot(x, b)) <= bound);
        CHECK(std::abs(dot_minus1(x, b, s)) <= bound);
    }

    // single active mode: the quadratic needs two distinct eigenvalues
    StateVector e3(8, 0.0);
    e3[2] = 1.7;
    const StateVector b3 = eval_drift(t, e3, s);
    for (double v : b3) CHECK(v == 0.0);

    const StateVector zero(8, 0.0);
    for (double v : eval_drift(t, zero, s)) CHECK(v == 0.0);
}

TEST_CASE("drift against a dense naive contraction") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t = galerkin_triads(s);
    RngStream rng(5, 0);
    for (int trial = 0; trial < 10; ++trial) {
        const StateVector x = random_state(rng, 8, 1.5);
        const StateVector fast = eval_drift(t, x, s);
        StateVector dense(8, 0.0);
        for (int l = 0; l < 8; ++l) {
            for (int a = 0; a < 8; ++a) {
                for (int b = 0; b < 8; ++b) {
                    dense[l] += x[a] * x[b] * (s.inv_lambda()[a] - s.inv_lambda()[b]) *
                                t.value(a, b, l);
                }
            }
        }
        for (int l = 0; l < 8; ++l) {
            CHECK(fast[l] == doctest::Approx(dense[l]).epsilon(1e-12));
        }
    }
}

TEST_CASE("synthetic tensor determinism and identities") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t1 = synthetic_triads(77, 0.8, 2.0, s);
    const TriadTensor t2 = synthetic_triads(77, 0.8, 2.0, s);
    REQUIRE(t1.triples().size() == t2.triples().size());
    for (std::size_t i = 0; i < t1.triples().size(); ++i) {
        CHECK(t1.triples()[i].t == t2.triples()[i].t);
    }
    // doubling the magnitude doubles the drift pointwise
    const TriadTensor t3 = synthetic_triads(77, 0.8, 4.0, s);
    RngStream rng(8, 1);
    const StateVector x = random_state(rng, 8);
    const StateVector b1 = eval_drift(t1, x, s);
    const StateVector b3 = eval_drift(t3, x, s);
    for (int l = 0; l < 8; ++l) CHECK(b3[l] == doctest::Approx(2.0 * b1[l]).epsilon(1e-14));

    for (int trial = 0; trial < 1000; ++trial) {
        const StateVector y = random_state(rng, 8, 2.0);
        const StateVector b = eval_drift(t1, y, s);
        const double ny = norm(y);
        const double bound = 1e-10 * (1.0 + ny * ny * ny);
        CHECK(std::abs(dot(y, b)) <= bound);
        CHECK(std::abs(dot_minus1(y, b, s)) <= bound);
    }
}

TEST_CASE("stirring family enumeration") {
    const Spectrum s4 = desk_spectrum();
    const StirringFamily f4(s4);
    CHECK(f4.triples().size() == 32);  // 8 * C(4,3)
    CHECK(f4.M() == 36);
    CHECK(f4.triples().front() == std::array<int, 3>{0, 2, 4});

    const Spectrum s5 = Spectrum::explicit_list({1.0, 2.0, 3.0, 4.0, 5.0});
    const StirringFamily f5(s5);
    CHECK(f5.triples().size() == 80);  // 8 * C(5,3)
    CHECK(f5.M() == 85);
}

TEST_CASE("stirring field values") {
    const Spectrum s = desk_spectrum();
    const StirringFamily f(s);

    // rotation generator on the first pair
    StateVector e1(8, 0.0);
    e1[0] = 1.0;
    const int m_rot1 = static_cast<int>(f.triples().size()) + 1;
    const StateVector r1 = eval_stirring(f, m_rot1, e1, s);
    CHECK(r1[0] == 0.0);
    CHECK(r1[1] == -1.0);
    for (int l = 2; l < 8; ++l) CHECK(r1[l] == 0.0);

    // lexicographically first triple (modes 1,3,5) at e1 + e3: only the first
    // cyclic term is active and 1/mu_2 = 0.49 exactly
    StateVector x(8, 0.0);
    x[0] = 1.0;
    x[2] = 1.0;
    const StateVector tj = eval_stirring(f, 1, x, s);
    CHECK(tj[4] == doctest::Approx(1.0 - 0.49).epsilon(1e-14));
    for (int l = 0; l < 8; ++l) {
        if (l != 4) CHECK(tj[l] == 0.0);
    }
    CHECK(dot(x, tj) == 0.0);
    CHECK(dot_minus1(x, tj, s) == 0.0);

    CHECK_THROWS_AS(eval_stirring(f, 0, x, s), IndexOutOfRange);
    CHECK_THROWS_AS(eval_stirring(f, f.M() + 1, x, s), IndexOutOfRange);
}

TEST_CASE("stirring conservation identities for every field") {
    const Spectrum s = desk_spectrum();
    const StirringFamily f(s);
    RngStream rng(31, 0);
    for (int trial = 0; trial < 200; ++trial) {
        const StateVector x = random_state(rng, 8, 2.0);
        const double nx2 = dot(x, x);
        const double bound = 1e-12 * (1.0 + nx2);
        for (int m = 1; m <= f.M(); ++m) {
            const StateVector z = eval_stirring(f, m, x, s);
            CHECK(std::abs(dot(x, z)) <= bound);
            CHECK(std::abs(dot_minus1(x, z, s)) <= bound);
        }
    }
}

TEST_CASE("divergence of the fields vanishes (finite differences)") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t = galerkin_triads(s);
    const StirringFamily f(s);
    RngStream rng(17, 0);
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        StateVector x = random_state(rng, 8, 1.5);
        auto divergence = [&](auto&& field) {
            double div = 0.0, scale = 0.0;
            for (int l = 0; l < 8; ++l) {
                StateVector xp = x, xm = x;
                xp[l] += h;
                xm[l] -= h;
                const StateVector fp = field(xp);
                const StateVector fm = field(xm);
                div += (fp[l] - fm[l]) / (2.0 * h);
                scale += std::abs(fp[l]) + std::abs(fm[l]);
            }
            return std::abs(div) / std::max(1.0, scale);
        };
        CHECK(divergence([&](const StateVector& y) { return eval_drift(t, y, s); }) <= 1e-6);
        for (int m : {1, 9, 33, 36}) {
            CHECK(divergence([&](const StateVector& y) { return eval_stirring(f, m, y, s); }) <=
                  1e-6);
        }
    }
}

TEST_CASE("ito correction") {
    const Spectrum s = desk_spectrum();
    const StirringFamily f(s);
    const double kappa = 0.5, eps = 0.25;

    SUBCASE("zero state") {
        const StateVector zero(8, 0.0);
        for (double v : ito_correction(f, zero, kappa, eps, s)) CHECK(v == 0.0);
    }

    SUBCASE("rotation block gives -(kappa/2eps) x when triples are inactive") {
        // single active pair: every triple contribution needs two distinct
        // active eigenvalues and drops out
        StateVector x(8, 0.0);
        x[2] = 0.7;
        x[3] = -1.1;
        const StateVector c = ito_correction(f, x, kappa, eps, s);
        const double scale = 0.5 * kappa / eps;
        CHECK(c[2] == doctest::Approx(-scale * x[2]).epsilon(1e-14));
        CHECK(c[3] == doctest::Approx(-scale * x[3]).epsilon(1e-14));
        for (int l : {0, 1, 4, 5, 6, 7}) CHECK(c[l] == 0.0);
    }

    SUBCASE("matches finite-difference Jacobians of the stirring fields") {
        RngStream rng(23, 0);
        const double h = 1e-5;
        for (int trial = 0; trial < 5; ++trial) {
            const StateVector x = random_state(rng, 8, 1.2);
            StateVector fd(8, 0.0);
            for (int m = 1; m <= f.M(); ++m) {
                const StateVector zm = eval_stirring(f, m, x, s);
                for (int l = 0; l < 8; ++l) {
                    StateVector xp = x, xm_ = x;
                    xp[l] += h;
                    xm_[l] -= h;
                    const StateVector fp = eval_stirring(f, m, xp, s);
                    const StateVector fm = eval_stirring(f, m, xm_, s);
                    for (int c = 0; c < 8; ++c) {
                        fd[c] += (fp[c] - fm[c]) / (2.0 * h) * zm[l];
                    }
                }
            }
            const double scale = 0.5 * kappa / eps;
            for (auto& v : fd) v *= scale;
            const StateVector analytic = ito_correction(f, x, kappa, eps, s);
            for (int l = 0; l < 8; ++l) {
                CHECK(std::abs(analytic[l] - fd[l]) <=
                      1e-6 * std::max(1.0, std::abs(analytic[l])));
            }
        }
    }
}

TEST_CASE("stirring min-rank diagnostic") {
    const Spectrum s = desk_spectrum();
    const StirringFamily f(s);

    SUBCASE("single-pair support flags the degenerate complement") {
        StateVector x(8, 0.0);
        x[0] = 1.4;
        const MinRankResult r = stirring_min_rank(f, x, s);
        CHECK(r.degenerate_complement);
    }

    SUBCASE("good state has strictly positive rank value") {
        StateVector x(8, 0.0);
        x[0] = 1.0;
        x[7] = 1.0;  // ratio 1.6, away from every eigenvalue
        const MinRankResult r = stirring_min_rank(f, x, s);
        CHECK(!r.degenerate_complement);
        CHECK(r.value > 0.0);

        // Monte Carlo minimization over unit z in the complement can only
        // stay above the eigenvalue minimum, and should get close to it
        RngStream rng(3, 0);
        const auto& il = s.inv_lambda();
        StateVector lx(8);
        for (int l = 0; l < 8; ++l) lx[l] = x[l] * il[l];
        double mc_min = 1e300;
        for (int trial = 0; trial < 20000; ++trial) {
            StateVector z(8);
            for (auto& v : z) v = rng.gaussian();
            const double a1 = dot(z, x) / dot(x, x);
            for (int l = 0; l < 8; ++l) z[l] -= a1 * x[l];
            StateVector w = lx;
            const double b1 = dot(w, x) / dot(x, x);
            for (int l = 0; l < 8; ++l) w[l] -= b1 * x[l];
            const double a2 = dot(z, w) / dot(w, w);
            for (int l = 0; l < 8; ++l) z[l] -= a2 * w[l];
            const double nz = norm(z);
            for (auto& v : z) v /= nz;
            double quad = 0.0;
            const double u = dot(x, x);
            for (int m = 1; m <= f.M(); ++m) {
                const StateVector zm = eval_stirring(f, m, x, s);
                const double proj = dot(zm, z);
                const bool rotation = m > static_cast<int>(f.triples().size());
                quad += proj * proj / (rotation ? u : u * u);
            }
            mc_min = std::min(mc_min, quad);
        }
        CHECK(mc_min >= r.value - 1e-10);
        CHECK(mc_min <= 10.0 * r.value);

        // scale invariance of the normalized form
        StateVector x2 = x;
        for (auto& v : x2) v *= 2.0;
        const MinRankResult r2 = stirring_min_rank(f, x2, s);
        CHECK(r2.value == doctest::Approx(r.value).epsilon(1e-12));
    }

    SUBCASE("zero state throws") {
        StateVector zero(8, 0.0);
        CHECK_THROWS_AS(stirring_min_rank(f, zero, s), ZeroState);
    }
}

TEST_CASE("min-rank positive on Gaussian-drawn good states") {
    const Spectrum s = desk_spectrum();
    const StirringFamily f(s);
    RngStream rng(44, 0);
    int good_seen = 0;
    for (int trial = 0; trial < 500 && good_seen < 100; ++trial) {
        StateVector x(8);
        for (auto& v : x) v = std::sqrt(0.5) * rng.gaussian();
        if (classify_state(x, s, 0.2, 20.0, 0.1) != StateClass::Good) continue;
        ++good_seen;
        const MinRankResult r = stirring_min_rank(f, x, s);
        CHECK(!r.degenerate_complement);
        CHECK(r.value > 0.0);
    }
    CHECK(good_seen >= 100);
}

TEST_CASE("fast-field table reproduces the individual fields") {
    const Spectrum s = desk_spectrum();
    const TriadTensor t = galerkin_triads(s);
    const StirringFamily f(s);
    const FastFieldTable table = FastFieldTable::build(t, f, s);
    RngStream rng(11, 0);
    const StateVector x = random_state(rng, 8, 1.3);

    std::vector<double> weights(table.n_weights, 0.0);
    std::vector<double> out(8, 0.0);

    weights[0] = 1.0;  // drift slot
    table.apply(x.data(), weights.data(), out.data());
    const StateVector b = eval_drift(t, x, s);
    for (int l = 0; l < 8; ++l) CHECK(out[l] == doctest::Approx(b[l]).epsilon(1e-14));

    for (int m = 1; m <= f.M(); ++m) {
        std::fill(weights.begin(), weights.end(), 0.0);
        std::fill(out.begin(), out.end(), 0.0);
        weights[m] = 1.0;
        table.apply(x.data(), weights.data(), out.data());
        const StateVector z = eval_stirring(f, m, x, s);
        for (int l = 0; l < 8; ++l) CHECK(out[l] == doctest::Approx(z[l]).epsilon(1e-14));
    }
}
