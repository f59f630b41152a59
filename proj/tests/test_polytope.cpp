#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "coneflow/errors.hpp"
#include "coneflow/observables.hpp"
#include "coneflow/polytope.hpp"
#include "coneflow/rng.hpp"
#include "coneflow/spectrum.hpp"

using namespace coneflow;

namespace {

Spectrum desk_spectrum() { return Spectrum::torus(0.7, {{0, 1}, {1, 0}, {1, 1}, {0, 2}}); }

ConePoint random_interior(RngStream& rng, const Spectrum& s) {
    const double v = 0.2 + 3.0 * rng.uniform();
    const double r = 1.0 + (s.lambda_max() - 1.0) * (0.02 + 0.96 * rng.uniform());
    return {r * v, v};
}

}  // namespace

TEST_CASE("polytope construction and boundary degeneration") {
    const Spectrum s = desk_spectrum();

    SUBCASE("lower boundary: point mass at the origin") {
        const SectorPolytope p = build_polytope({3.0, 3.0}, s);
        CHECK(p.degenerate);
        for (double v : p.point) CHECK(v == 0.0);
        CHECK_THROWS_AS(volume_centroid(p), DegeneratePolytope);
    }

    SUBCASE("upper boundary: point mass on the top pair") {
        const SectorPolytope p = build_polytope({4.0, 1.0}, s);
        CHECK(p.degenerate);
        CHECK(p.point[0] == 0.0);
        CHECK(p.point[1] == 4.0);
    }

    SUBCASE("interior point in the second sector: upper halfspace vacuous") {
        const SectorPolytope p = build_polytope({2.0, 1.0}, s);
        CHECK(!p.degenerate);
        CHECK(p.sector == 2);
        CHECK(p.r2 < 0.0);  // ratio 2 < mu_2, so c2.sigma >= r2 never binds
        CHECK(p.r1 == doctest::Approx(1.0));
    }

    SUBCASE("outside the cone") {
        CHECK_THROWS_AS(build_polytope({1.0, 2.0}, s), OutsideCone);
        CHECK_THROWS_AS(build_polytope({4.5, 1.0}, s), OutsideCone);
    }
}

TEST_CASE("exact volume and centroid of the sector-2 simplex") {
    const Spectrum s = desk_spectrum();
    const SectorPolytope p = build_polytope({2.0, 1.0}, s);
    const VolumeCentroid vc = volume_centroid(p);

    // triangle {c3 s3 + c4 s4 <= 1, s >= 0} with c3 = 100/149, c4 = 3/4:
    // volume = 1/(2 c3 c4), centroid = (1/(3 c3), 1/(3 c4))
    CHECK(vc.volume == doctest::Approx(149.0 / 150.0).epsilon(1e-12));
    CHECK(vc.centroid[0] == doctest::Approx(149.0 / 300.0).epsilon(1e-12));
    CHECK(vc.centroid[1] == doctest::Approx(4.0 / 9.0).epsilon(1e-12));

    // first-order homogeneity of the constraints
    const VolumeCentroid vc2 = volume_centroid(build_polytope({4.0, 2.0}, s));
    CHECK(vc2.volume == doctest::Approx(4.0 * vc.volume).epsilon(1e-12));
    CHECK(vc2.centroid[0] == doctest::Approx(2.0 * vc.centroid[0]).epsilon(1e-12));
    CHECK(vc2.centroid[1] == doctest::Approx(2.0 * vc.centroid[1]).epsilon(1e-12));
}

TEST_CASE("volume and centroid against a rejection Monte Carlo oracle") {
    const Spectrum s = desk_spectrum();
    const SectorPolytope p = build_polytope({2.0, 1.0}, s);
    const VolumeCentroid vc = volume_centroid(p);

    RngStream rng(4242, 0);
    const long n = 10000000;
    long accepted = 0;
    double sum0 = 0.0, sum1 = 0.0;
    std::vector<double> sigma(2);
    for (long k = 0; k < n; ++k) {
        sigma[0] = rng.uniform() * p.box_hi[0];
        sigma[1] = rng.uniform() * p.box_hi[1];
        if (p.l1(sigma) <= p.r1 && p.l2(sigma) >= p.r2) {
            ++accepted;
            sum0 += sigma[0];
            sum1 += sigma[1];
        }
    }
    const double box_vol = p.box_hi[0] * p.box_hi[1];
    const double frac = static_cast<double>(accepted) / n;
    const double vol_mc = box_vol * frac;
    const double vol_se = box_vol * std::sqrt(frac * (1.0 - frac) / n);
    CHECK(std::abs(vol_mc - vc.volume) <= 4.0 * vol_se);

    const double mean0 = sum0 / accepted;
    const double mean1 = sum1 / accepted;
    // crude SE bound: coordinate range over sqrt(count)
    const double se0 = p.box_hi[0] / std::sqrt(static_cast<double>(accepted));
    const double se1 = p.box_hi[1] / std::sqrt(static_cast<double>(accepted));
    CHECK(std::abs(mean0 - vc.centroid[0]) <= 4.0 * se0);
    CHECK(std::abs(mean1 - vc.centroid[1]) <= 4.0 * se1);
}

TEST_CASE("exact path on larger spectra agrees with Monte Carlo") {
    const Spectrum s = Spectrum::explicit_list({1.0, 1.7, 2.4, 3.1, 4.2, 5.5});  // n = 6, dim 4
    const ConePoint w{2.6, 1.0};
    const SectorPolytope p = build_polytope(w, s);
    const VolumeCentroid vc = volume_centroid(p);
    CHECK(vc.volume > 0.0);

    RngStream rng(99, 0);
    const long n = 2000000;
    long accepted = 0;
    std::vector<double> mean(4, 0.0);
    std::vector<double> sigma(4);
    double box_vol = 1.0;
    for (double b : p.box_hi) box_vol *= b;
    for (long k = 0; k < n; ++k) {
        for (int i = 0; i < 4; ++i) sigma[i] = rng.uniform() * p.box_hi[i];
        if (p.l1(sigma) <= p.r1 && p.l2(sigma) >= p.r2) {
            ++accepted;
            for (int i = 0; i < 4; ++i) mean[i] += sigma[i];
        }
    }
    const double frac = static_cast<double>(accepted) / n;
    const double vol_mc = box_vol * frac;
    const double vol_se = box_vol * std::sqrt(frac * (1.0 - frac) / n);
    CHECK(std::abs(vol_mc - vc.volume) <= 4.0 * vol_se);
    for (int i = 0; i < 4; ++i) {
        mean[i] /= accepted;
        const double se = p.box_hi[i] / std::sqrt(static_cast<double>(accepted));
        CHECK(std::abs(mean[i] - vc.centroid[i]) <= 4.0 * se);
    }
}

TEST_CASE("uniform sampler: membership, determinism, centroid") {
    const Spectrum s = desk_spectrum();
    const SectorPolytope p = build_polytope({2.0, 1.0}, s);

    PolytopeSampler sampler(p);
    RngStream rng(7, 0);
    double sum0 = 0.0, sum1 = 0.0;
    const int n = 1000000;
    for (int k = 0; k < n; ++k) {
        const auto sigma = sampler.sample(rng);
        REQUIRE(p.contains(sigma, 0.0));  // exact membership by construction
        sum0 += sigma[0];
        sum1 += sigma[1];
    }
    CHECK(!sampler.hit_and_run_engaged());
    const VolumeCentroid vc = volume_centroid(p);
    const double se0 = p.box_hi[0] / std::sqrt(static_cast<double>(n));
    const double se1 = p.box_hi[1] / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum0 / n - vc.centroid[0]) <= 4.0 * se0);
    CHECK(std::abs(sum1 / n - vc.centroid[1]) <= 4.0 * se1);

    // identical stream, identical sequence
    PolytopeSampler s1(p), s2(p);
    RngStream r1(123, 5), r2(123, 5);
    for (int k = 0; k < 100; ++k) {
        const auto a = s1.sample(r1);
        const auto b = s2.sample(r2);
        CHECK(a[0] == b[0]);
        CHECK(a[1] == b[1]);
    }
}

TEST_CASE("hit-and-run engages on sliver polytopes and stays inside") {
    const Spectrum s = desk_spectrum();
    // ratio very close to the top of the cone: feasible corner is tiny
    const SectorPolytope p = build_polytope({3.99995, 1.0}, s);
    REQUIRE(!p.degenerate);
    PolytopeSampler sampler(p);
    RngStream rng(2, 0);
    std::vector<double> mean(2, 0.0);
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const auto sigma = sampler.sample(rng);
        REQUIRE(p.contains(sigma, 1e-12));
        mean[0] += sigma[0];
        mean[1] += sigma[1];
    }
    CHECK(sampler.hit_and_run_engaged());
    mean[0] /= n;
    mean[1] /= n;
    const VolumeCentroid vc = volume_centroid(p);
    // chain samples are correlated; compare on the scale of the polytope
    const double scale0 = std::max(1e-12, vc.centroid[0]);
    const double scale1 = std::max(1e-12, vc.centroid[1]);
    CHECK(std::abs(mean[0] - vc.centroid[0]) / scale0 <= 0.2);
    CHECK(std::abs(mean[1] - vc.centroid[1]) / scale1 <= 0.05);
}

TEST_CASE("lift onto the fiber") {
    const Spectrum s = desk_spectrum();

    SUBCASE("observables reproduce the cone point exactly") {
        const SectorPolytope p = build_polytope({2.0, 1.0}, s);
        PolytopeSampler sampler(p);
        RngStream rng(5, 0);
        for (int k = 0; k < 1000; ++k) {
            const auto sigma = sampler.sample(rng);
            std::vector<double> angles(4);
            for (auto& a : angles) a = 2.0 * M_PI * rng.uniform();
            const StateVector x = lift_sample(sigma, angles, {2.0, 1.0}, s);
            const Observables o = compute_observables(x, s);
            CHECK(std::abs(o.u - 2.0) <= 8.0 * 2.220446049250313e-16 * 2.0);
            CHECK(std::abs(o.v - 1.0) <= 8.0 * 2.220446049250313e-16 * 2.0);
        }
    }

    SUBCASE("degenerate lower boundary: all mass on the first pair") {
        std::vector<double> angles = {0.0, 0.0, 0.0, 0.0};
        const StateVector x = lift_sample({}, angles, {3.0, 3.0}, s);
        CHECK(x[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
        for (int l = 1; l < 8; ++l) CHECK(x[l] == 0.0);
    }

    SUBCASE("zero angles kill the sine components") {
        const SectorPolytope p = build_polytope({2.0, 1.0}, s);
        const auto sigma = p.interior_point();
        const StateVector x = lift_sample(sigma, {0.0, 0.0, 0.0, 0.0}, {2.0, 1.0}, s);
        for (int i = 0; i < 4; ++i) CHECK(x[2 * i + 1] == 0.0);
    }

    SUBCASE("sigma outside the polytope raises the radial error") {
        const SectorPolytope p = build_polytope({2.0, 1.0}, s);
        std::vector<double> sigma = {10.0 * p.box_hi[0], 10.0 * p.box_hi[1]};
        CHECK_THROWS_AS(lift_sample(sigma, {0.0, 0.0, 0.0, 0.0}, {2.0, 1.0}, s), NegativeRadial);
    }
}

TEST_CASE("exact averaged coefficients at the reference point") {
    const Spectrum s = desk_spectrum();
    const QValues qv = q_values({2.0, 1.0}, s);
    REQUIRE(qv.exact);

    // frozen rational values pushed through the affine radial map
    CHECK(qv.q[0] == doctest::Approx(689.0 / 3400.0).epsilon(1e-12));
    CHECK(qv.q[1] == doctest::Approx(689.0 / 3400.0).epsilon(1e-12));
    CHECK(qv.q[2] == doctest::Approx(50.0 / 153.0).epsilon(1e-12));
    CHECK(qv.q[3] == doctest::Approx(50.0 / 153.0).epsilon(1e-12));
    CHECK(qv.q[4] == doctest::Approx(149.0 / 600.0).epsilon(1e-12));
    CHECK(qv.q[5] == doctest::Approx(149.0 / 600.0).epsilon(1e-12));
    CHECK(qv.q[6] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(qv.q[7] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("q structure at random interior points") {
    const Spectrum s = desk_spectrum();
    RngStream rng(314, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const ConePoint w = random_interior(rng, s);
        const QValues qv = q_values(w, s);
        double sum = 0.0, sum_inv = 0.0;
        for (int l = 0; l < 8; ++l) {
            CHECK(qv.q[l] > 0.0);
            sum += qv.q[l];
            sum_inv += qv.q[l] * s.inv_lambda()[l];
        }
        CHECK(std::abs(sum - w.u) <= 1e-9 * w.u);
        CHECK(std::abs(sum_inv - w.v) <= 1e-9 * w.v);
        for (int i = 0; i < 4; ++i) CHECK(qv.q[2 * i] == qv.q[2 * i + 1]);

        // first-order homogeneity
        const QValues q2 = q_values({2.0 * w.u, 2.0 * w.v}, s);
        for (int l = 0; l < 8; ++l) {
            CHECK(std::abs(q2.q[l] - 2.0 * qv.q[l]) <= 1e-12 * (1.0 + q2.q[l]));
        }
    }
}

TEST_CASE("q boundary values and interior limits") {
    const Spectrum s = desk_spectrum();

    const QValues low = q_values({3.0, 3.0}, s);
    CHECK(low.q[0] == 1.5);
    CHECK(low.q[1] == 1.5);
    for (int l = 2; l < 8; ++l) CHECK(low.q[l] == 0.0);

    const QValues high = q_values({4.0, 1.0}, s);
    CHECK(high.q[6] == 2.0);
    CHECK(high.q[7] == 2.0);
    for (int l = 0; l < 6; ++l) CHECK(high.q[l] == 0.0);

    // interior evaluations converge to the closed forms near the boundary
    const QValues near_low = q_values({1.0 + 1e-4, 1.0}, s);
    CHECK(std::abs(near_low.q[0] - 0.5) <= 1e-3);
    for (int l = 2; l < 8; ++l) CHECK(near_low.q[l] <= 1e-3);
    const QValues near_high = q_values({4.0 - 1e-4, 1.0}, s);
    CHECK(std::abs(near_high.q[6] - 2.0) <= 1e-3);
    for (int l = 0; l < 6; ++l) CHECK(near_high.q[l] <= 1e-3);
}

TEST_CASE("Monte Carlo q agrees with the exact path within errors") {
    const Spectrum s = desk_spectrum();
    RngStream rng(555, 0);
    const QValues exact = q_values({2.0, 1.0}, s);
    const QValues mc = q_values({2.0, 1.0}, s, MonteCarloTag{200000}, rng);
    REQUIRE(!mc.exact);
    double sum = 0.0, sum_inv = 0.0, sum_se = 0.0, sum_inv_se = 0.0;
    for (int l = 0; l < 8; ++l) {
        CHECK(std::abs(mc.q[l] - exact.q[l]) <= 4.0 * mc.std_errors[l]);
        sum += mc.q[l];
        sum_inv += mc.q[l] * s.inv_lambda()[l];
        sum_se += mc.std_errors[l] * mc.std_errors[l];
        sum_inv_se += mc.std_errors[l] * mc.std_errors[l] * s.inv_lambda()[l] * s.inv_lambda()[l];
    }
    CHECK(std::abs(sum - 2.0) <= 3.0 * 2.0 * std::sqrt(sum_se));
    CHECK(std::abs(sum_inv - 1.0) <= 3.0 * 2.0 * std::sqrt(sum_inv_se));
    CHECK(mc.volume == doctest::Approx(149.0 / 150.0).epsilon(0.05));
}

TEST_CASE("ray table") {
    const Spectrum s = desk_spectrum();
    const QRayTable table = QRayTable::uniform(s, 257);

    SUBCASE("first row carries the lower boundary values") {
        CHECK(table.ratios().front() == 1.0);
        CHECK(table.row(0)[0] == 0.5);
        CHECK(table.row(0)[1] == 0.5);
        for (int l = 2; l < 8; ++l) CHECK(table.row(0)[l] == 0.0);
    }

    SUBCASE("every row satisfies the two linear constraints") {
        for (std::size_t i = 0; i < table.ratios().size(); ++i) {
            double sum = 0.0, sum_inv = 0.0;
            for (int l = 0; l < 8; ++l) {
                sum += table.row(i)[l];
                sum_inv += table.row(i)[l] * s.inv_lambda()[l];
            }
            CHECK(std::abs(sum - table.ratios()[i]) <= 1e-9 * (1.0 + table.ratios()[i]));
            CHECK(std::abs(sum_inv - 1.0) <= 1e-9);
        }
    }

    SUBCASE("continuity across the sector boundaries (refinement study)") {
        for (int i : {1, 2}) {
            const double mu_i = s.mu()[i];
            auto spread = [&](double d) {
                const QValues below = q_values({mu_i - d, 1.0}, s);
                const QValues above = q_values({mu_i + d, 1.0}, s);
                double m = 0.0;
                for (int l = 0; l < 8; ++l) m = std::max(m, std::abs(above.q[l] - below.q[l]));
                return m;
            };
            const double d1 = spread(1e-3);
            const double d2 = spread(2e-3);
            CHECK(d1 <= 20.0 * 2e-3);   // Lipschitz across the ray
            CHECK(d2 / d1 > 1.8);       // and linear in the offset
            CHECK(d2 / d1 < 2.2);
        }
    }

    SUBCASE("interpolated lookup matches exact evaluation on nodes and scales") {
        std::vector<double> q(8);
        table.eval(2.0 * table.ratios()[100], 2.0, q.data());
        for (int l = 0; l < 8; ++l) {
            CHECK(q[l] == doctest::Approx(2.0 * table.row(100)[l]).epsilon(1e-12));
        }
        // between nodes: close to exact (the grid is fine)
        const double r = 0.5 * (table.ratios()[100] + table.ratios()[101]);
        table.eval(r, 1.0, q.data());
        const QValues exact = q_values({r, 1.0}, s);
        for (int l = 0; l < 8; ++l) {
            CHECK(std::abs(q[l] - exact.q[l]) <= 2e-4);
        }
    }

    SUBCASE("ratio grid validation") {
        CHECK_THROWS_AS(QRayTable(s, {0.5, 1.0}), RatioOutOfRange);
        CHECK_THROWS_AS(QRayTable(s, {1.0, 5.0}), RatioOutOfRange);
        CHECK_THROWS_AS(QRayTable(s, {1.0, 1.0}), RatioOutOfRange);
    }
}

TEST_CASE("gaussian lift identity: q is the fiber average of squared modes") {
    // the conditional-mean property at one interior point, via the sampler:
    // lifted squared modes average to q within Monte Carlo error
    const Spectrum s = desk_spectrum();
    const ConePoint w{2.5, 1.0};
    const SectorPolytope p = build_polytope(w, s);
    PolytopeSampler sampler(p);
    RngStream rng(17, 3);
    const int n = 200000;
    std::vector<double> mean(8, 0.0), m2(8, 0.0);
    std::vector<double> angles(4);
    for (int k = 0; k < n; ++k) {
        const auto sigma = sampler.sample(rng);
        for (auto& a : angles) a = 2.0 * M_PI * rng.uniform();
        const StateVector x = lift_sample(sigma, angles, w, s);
        for (int l = 0; l < 8; ++l) {
            const double sq = x[l] * x[l];
            const double d = sq - mean[l];
            mean[l] += d / (k + 1);
            m2[l] += d * (sq - mean[l]);
        }
    }
    const QValues exact = q_values(w, s);
    for (int l = 0; l < 8; ++l) {
        const double se = std::sqrt(m2[l] / (n - 1.0) / n);
        CHECK(std::abs(mean[l] - exact.q[l]) <= 4.0 * se);
    }
}

TEST_CASE("dimension cap on the exact path") {
    std::vector<double> mu(12);
    for (int i = 0; i < 12; ++i) mu[i] = 1.0 + i * 0.5;
    const Spectrum s = Spectrum::explicit_list(mu);  // dim = 10
    const SectorPolytope p = build_polytope({3.0, 1.5}, s);
    CHECK_THROWS_AS(volume_centroid(p), DimensionTooHigh);
    // Monte Carlo path still works
    RngStream rng(1, 0);
    const QValues mc = q_values({3.0, 1.5}, s, MonteCarloTag{20000}, rng);
    double sum = 0.0;
    for (double q : mc.q) sum += q;
    double se = 0.0;
    for (double e : mc.std_errors) se += e * e;
    CHECK(std::abs(sum - 3.0) <= 3.0 * 2.0 * std::sqrt(se));
}
