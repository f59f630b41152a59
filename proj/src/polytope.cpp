#include "coneflow/polytope.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "coneflow/errors.hpp"

namespace coneflow {

namespace {

constexpr double kBoundaryTol = 1e-12;  // relative width below which (u,v) counts as boundary

}  // namespace

double SectorPolytope::l1(const std::vector<double>& sigma) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += c1[i] * sigma[i];
    return s;
}

double SectorPolytope::l2(const std::vector<double>& sigma) const {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += c2[i] * sigma[i];
    return s;
}

bool SectorPolytope::contains(const std::vector<double>& sigma, double tol) const {
    const double scale = 1.0 + std::abs(u);
    for (int i = 0; i < dim; ++i) {
        if (sigma[i] < -tol * scale) return false;
    }
    return l1(sigma) <= r1 + tol * scale && l2(sigma) >= r2 - tol * scale;
}

void SectorPolytope::radial_pair(const std::vector<double>& sigma, double& s1, double& s2) const {
    const double m2 = mu[1];
    s1 = (-u + m2 * v + l2(sigma)) / (m2 - 1.0);
    s2 = (u - v - l1(sigma)) * m2 / (m2 - 1.0);
    const double floor = -1e-12 * (1.0 + u);
    if (s1 < floor || s2 < floor) {
        throw NegativeRadial("implied radial masses (" + std::to_string(s1) + ", " +
                             std::to_string(s2) + ") are negative: sigma lies outside the polytope");
    }
    if (s1 < 0.0) s1 = 0.0;
    if (s2 < 0.0) s2 = 0.0;
}

std::vector<double> SectorPolytope::interior_point() const {
    if (degenerate) return point;
    // Average the two-pair radial solutions: pair (1,j) is feasible below the
    // ratio mu_j, pair (j,n) above it, and (1,n) always. The average has all
    // coordinates positive and saturates only the l1 constraint, so shrinking
    // it slightly toward the origin gives a strictly feasible point.
    const int n = dim + 2;
    std::vector<double> sigma(dim, 0.0);
    const double ratio = u / v;
    int used = 0;
    auto add_pair_1j = [&](int j) {  // mass on pairs 1 and j (1-based)
        const double mu_j = mu[j - 1];
        const double sj = (u - v) / (1.0 - 1.0 / mu_j);
        if (j >= 3) sigma[j - 3] += sj;
        ++used;
    };
    auto add_pair_jn = [&](int j) {  // mass on pairs j and n
        const double mu_j = mu[j - 1];
        const double mu_n = mu[n - 1];
        const double sj = (v - u / mu_n) / (1.0 / mu_j - 1.0 / mu_n);
        if (j >= 3) sigma[j - 3] += sj;
        const double sn = u - sj;
        sigma[dim - 1] += sn;
        ++used;
    };
    add_pair_1j(n);  // the always-feasible (1, n) split
    for (int j = 3; j < n; ++j) {
        if (ratio <= mu[j - 1]) {
            add_pair_1j(j);
        } else {
            add_pair_jn(j);
        }
    }
    for (auto& s : sigma) s /= static_cast<double>(used);
    // pull strictly inside: scaling reduces l1 below r1 and keeps coordinates
    // positive; cap the shrink so l2 stays above r2
    double theta = 0.1;
    if (r2 > 0.0) {
        const double l2v = l2(sigma);
        theta = std::min(theta, 0.5 * (1.0 - r2 / l2v));
    }
    for (auto& s : sigma) s *= (1.0 - theta);
    return sigma;
}

SectorPolytope build_polytope(const ConePoint& w, const Spectrum& s) {
    if (!in_cone(w, s, 1e-12)) {
        throw OutsideCone("(" + std::to_string(w.u) + ", " + std::to_string(w.v) +
                          ") lies outside the cone");
    }
    SectorPolytope p;
    p.u = w.u;
    p.v = w.v;
    p.dim = s.n() - 2;
    p.mu = s.mu();
    p.sector = cone_sector(w, s);

    p.c1.resize(p.dim);
    p.c2.resize(p.dim);
    p.box_hi.resize(p.dim);
    p.r1 = w.u - p.mu[0] * w.v;
    p.r2 = w.u - p.mu[1] * w.v;
    for (int i = 0; i < p.dim; ++i) {
        const double mu_i = p.mu[i + 2];
        p.c1[i] = 1.0 - p.mu[0] / mu_i;
        p.c2[i] = 1.0 - p.mu[1] / mu_i;
        p.box_hi[i] = std::max(0.0, p.r1) / p.c1[i];
    }

    const double lamN = s.lambda_max();
    if (w.u <= 0.0 || w.u - w.v <= kBoundaryTol * w.u) {
        p.degenerate = true;
        p.point.assign(p.dim, 0.0);
    } else if (lamN * w.v - w.u <= kBoundaryTol * w.u) {
        p.degenerate = true;
        p.point.assign(p.dim, 0.0);
        p.point[p.dim - 1] = w.u;
    }
    return p;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct HPoly {
    MatrixXd A;  // rows: a_i . x <= b_i
    VectorXd b;
};

// all vertices of {A x <= b} by enumerating row subsets
std::vector<VectorXd> enumerate_vertices(const HPoly& h, double scale) {
    const int d = static_cast<int>(h.A.cols());
    const int m = static_cast<int>(h.A.rows());
    const double feas_tol = 1e-10 * (1.0 + scale);
    std::vector<VectorXd> verts;
    std::vector<int> subset(d);

    std::vector<int> stack;
    stack.reserve(d);
    // iterate over all d-subsets of rows
    std::vector<int> idx(d);
    for (int i = 0; i < d; ++i) idx[i] = i;
    while (true) {
        MatrixXd M(d, d);
        VectorXd rhs(d);
        for (int i = 0; i < d; ++i) {
            M.row(i) = h.A.row(idx[i]);
            rhs(i) = h.b(idx[i]);
        }
        Eigen::FullPivLU<MatrixXd> lu(M);
        if (lu.isInvertible()) {
            VectorXd x = lu.solve(rhs);
            bool feasible = true;
            for (int r = 0; r < m && feasible; ++r) {
                if (h.A.row(r).dot(x) > h.b(r) + feas_tol) feasible = false;
            }
            if (feasible) {
                bool dup = false;
                for (const auto& v : verts) {
                    if ((v - x).lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + scale)) {
                        dup = true;
                        break;
                    }
                }
                if (!dup) verts.push_back(std::move(x));
            }
        }
        // next subset
        int i = d - 1;
        while (i >= 0 && idx[i] == m - d + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
    }
    return verts;
}

struct VC {
    double volume = 0.0;
    VectorXd centroid;
};

// volume and centroid of conv(verts), verts also satisfying {A x <= b};
// recursion over facets, cone decomposition from the vertex mean
VC vc_recursive(const std::vector<VectorXd>& verts, const HPoly& h, double scale) {
    const int d = static_cast<int>(h.A.cols());
    VC out;
    out.centroid = VectorXd::Zero(d);
    if (static_cast<int>(verts.size()) < d + 1) return out;

    if (d == 1) {
        double lo = verts[0](0), hi = verts[0](0);
        for (const auto& v : verts) {
            lo = std::min(lo, v(0));
            hi = std::max(hi, v(0));
        }
        out.volume = hi - lo;
        out.centroid(0) = 0.5 * (lo + hi);
        return out;
    }

    VectorXd p = VectorXd::Zero(d);
    for (const auto& v : verts) p += v;
    p /= static_cast<double>(verts.size());

    const double face_tol = 1e-9 * (1.0 + scale);
    std::set<std::vector<int>> seen_facets;
    VectorXd centroid_acc = VectorXd::Zero(d);

    for (int r = 0; r < h.A.rows(); ++r) {
        const VectorXd a = h.A.row(r).transpose();
        const double anorm = a.norm();
        if (anorm <= 0.0) continue;
        std::vector<int> on_face;
        for (int j = 0; j < static_cast<int>(verts.size()); ++j) {
            if (std::abs(a.dot(verts[j]) - h.b(r)) <= face_tol * anorm) on_face.push_back(j);
        }
        if (static_cast<int>(on_face.size()) < d) continue;
        if (!seen_facets.insert(on_face).second) continue;  // same facet via a parallel row

        const double height = (h.b(r) - a.dot(p)) / anorm;
        if (height <= 0.0) continue;

        // orthonormal basis of the facet hyperplane
        Eigen::HouseholderQR<MatrixXd> qr(a);
        MatrixXd Q = qr.householderQ();
        MatrixXd basis = Q.rightCols(d - 1);
        const VectorXd origin = verts[on_face[0]];

        std::vector<VectorXd> fverts;
        fverts.reserve(on_face.size());
        for (int j : on_face) fverts.push_back(basis.transpose() * (verts[j] - origin));

        // project the remaining constraints onto the hyperplane
        std::vector<int> keep;
        for (int r2 = 0; r2 < h.A.rows(); ++r2) {
            if (r2 == r) continue;
            keep.push_back(r2);
        }
        HPoly sub;
        sub.A = MatrixXd(static_cast<int>(keep.size()), d - 1);
        sub.b = VectorXd(static_cast<int>(keep.size()));
        int nr = 0;
        for (int r2 : keep) {
            VectorXd arow = h.A.row(r2).transpose();
            VectorXd proj = basis.transpose() * arow;
            if (proj.norm() <= 1e-12 * (arow.norm() + 1.0)) continue;
            sub.A.row(nr) = proj.transpose();
            sub.b(nr) = h.b(r2) - arow.dot(origin);
            ++nr;
        }
        sub.A.conservativeResize(nr, d - 1);
        sub.b.conservativeResize(nr);

        VC face = vc_recursive(fverts, sub, scale);
        if (face.volume <= 0.0) continue;
        const double cone_vol = face.volume * height / static_cast<double>(d);
        const VectorXd face_centroid = origin + basis * face.centroid;
        const VectorXd cone_centroid =
            p + (static_cast<double>(d) / (d + 1.0)) * (face_centroid - p);
        out.volume += cone_vol;
        centroid_acc += cone_vol * cone_centroid;
    }
    if (out.volume > 0.0) out.centroid = centroid_acc / out.volume;
    return out;
}

HPoly polytope_hrep(const SectorPolytope& p) {
    const int d = p.dim;
    HPoly h;
    h.A = MatrixXd::Zero(d + 2, d);
    h.b = VectorXd::Zero(d + 2);
    for (int i = 0; i < d; ++i) {
        h.A(i, i) = -1.0;
        h.b(i) = 0.0;
    }
    for (int i = 0; i < d; ++i) {
        h.A(d, i) = p.c1[i];
        h.A(d + 1, i) = -p.c2[i];
    }
    h.b(d) = p.r1;
    h.b(d + 1) = -p.r2;
    return h;
}

}  // namespace

VolumeCentroid volume_centroid(const SectorPolytope& p) {
    if (p.degenerate) {
        throw DegeneratePolytope("volume is zero on the cone boundary");
    }
    if (p.dim > 8) {
        throw DimensionTooHigh("exact path supports dim <= 8, got " + std::to_string(p.dim));
    }
    const HPoly h = polytope_hrep(p);
    const double scale = *std::max_element(p.box_hi.begin(), p.box_hi.end());
    const auto verts = enumerate_vertices(h, scale);
    VC vc = vc_recursive(verts, h, scale);
    if (!(vc.volume > 0.0)) {
        throw DegeneratePolytope("polytope has empty interior at (" + std::to_string(p.u) + ", " +
                                 std::to_string(p.v) + ")");
    }
    VolumeCentroid out;
    out.volume = vc.volume;
    out.centroid.assign(vc.centroid.data(), vc.centroid.data() + p.dim);
    return out;
}

PolytopeSampler::PolytopeSampler(const SectorPolytope& p) : p_(p) {
    if (p.degenerate) throw DegeneratePolytope("cannot sample a boundary point uniformly");
}

double PolytopeSampler::measured_acceptance() const {
    return proposals_ > 0 ? static_cast<double>(accepts_) / static_cast<double>(proposals_) : 1.0;
}

std::vector<double> PolytopeSampler::rejection_sample(RngStream& rng) {
    std::vector<double> sigma(p_.dim);
    while (true) {
        ++proposals_;
        for (int i = 0; i < p_.dim; ++i) sigma[i] = rng.uniform() * p_.box_hi[i];
        if (p_.l1(sigma) <= p_.r1 && p_.l2(sigma) >= p_.r2) {
            ++accepts_;
            return sigma;
        }
        if (proposals_ >= 4096 && measured_acceptance() < 1e-3) {
            har_ = true;
            current_ = p_.interior_point();
            const int burn = 64 * p_.dim;
            for (int i = 0; i < burn; ++i) har_step(rng);
            return har_step(rng);
        }
    }
}

std::vector<double> PolytopeSampler::har_step(RngStream& rng) {
    const int d = p_.dim;
    std::vector<double> g(d);
    double norm = 0.0;
    for (int i = 0; i < d; ++i) {
        g[i] = rng.gaussian();
        norm += g[i] * g[i];
    }
    norm = std::sqrt(norm);
    for (auto& gi : g) gi /= norm;

    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    auto clip = [&](double coeff, double room) {
        // coeff * t <= room
        if (coeff > 0.0) {
            t_hi = std::min(t_hi, room / coeff);
        } else if (coeff < 0.0) {
            t_lo = std::max(t_lo, room / coeff);
        }
    };
    for (int i = 0; i < d; ++i) clip(-g[i], current_[i]);  // sigma_i + t g_i >= 0
    double c1g = 0.0, c2g = 0.0;
    for (int i = 0; i < d; ++i) {
        c1g += p_.c1[i] * g[i];
        c2g += p_.c2[i] * g[i];
    }
    clip(c1g, p_.r1 - p_.l1(current_));
    clip(-c2g, p_.l2(current_) - p_.r2);

    if (!(t_hi >= t_lo)) return current_;  // numerically stuck; keep the point
    const double t = t_lo + (t_hi - t_lo) * rng.uniform();
    for (int i = 0; i < d; ++i) current_[i] += t * g[i];
    return current_;
}

std::vector<double> PolytopeSampler::sample(RngStream& rng) {
    if (har_) return har_step(rng);
    return rejection_sample(rng);
}

StateVector lift_sample(const std::vector<double>& sigma, const std::vector<double>& angles,
                        const ConePoint& w, const Spectrum& s) {
    if (static_cast<int>(angles.size()) != s.n()) {
        throw DimensionMismatch("need one angle per pair");
    }
    SectorPolytope p = build_polytope(w, s);
    const std::vector<double>& sig = p.degenerate ? p.point : sigma;
    std::vector<double> radial(s.n(), 0.0);
    double s1, s2;
    p.radial_pair(sig, s1, s2);
    radial[0] = s1;
    radial[1] = s2;
    for (int i = 0; i < p.dim; ++i) radial[i + 2] = sig[i];
    StateVector x(s.N());
    for (int i = 0; i < s.n(); ++i) {
        const double r = std::sqrt(radial[i]);
        x[2 * i] = r * std::cos(angles[i]);
        x[2 * i + 1] = r * std::sin(angles[i]);
    }
    return x;
}

namespace {

QValues boundary_q(const ConePoint& w, const Spectrum& s) {
    QValues qv;
    qv.q.assign(s.N(), 0.0);
    qv.exact = true;
    qv.volume = 0.0;
    if (w.u <= 0.0) return qv;
    if (w.u - w.v <= kBoundaryTol * w.u) {
        qv.q[0] = qv.q[1] = 0.5 * w.u;
    } else {
        qv.q[s.N() - 2] = qv.q[s.N() - 1] = 0.5 * w.u;
    }
    return qv;
}

void fill_q_from_means(const SectorPolytope& p, const Spectrum& s,
                       const std::vector<double>& sigma_mean, QValues& qv) {
    double s1, s2;
    p.radial_pair(sigma_mean, s1, s2);
    qv.q.assign(s.N(), 0.0);
    qv.q[0] = qv.q[1] = 0.5 * s1;
    qv.q[2] = qv.q[3] = 0.5 * s2;
    for (int i = 0; i < p.dim; ++i) {
        qv.q[2 * (i + 2)] = qv.q[2 * (i + 2) + 1] = 0.5 * sigma_mean[i];
    }
}

}  // namespace

QValues q_values(const ConePoint& w, const Spectrum& s) {
    SectorPolytope p = build_polytope(w, s);
    if (p.degenerate) return boundary_q(w, s);
    VolumeCentroid vc = volume_centroid(p);
    QValues qv;
    qv.exact = true;
    qv.volume = vc.volume;
    fill_q_from_means(p, s, vc.centroid, qv);
    return qv;
}

QValues q_values(const ConePoint& w, const Spectrum& s, const MonteCarloTag& mc, RngStream& rng) {
    SectorPolytope p = build_polytope(w, s);
    if (p.degenerate) return boundary_q(w, s);
    PolytopeSampler sampler(p);
    const int n = s.n();
    std::vector<double> mean(n, 0.0), m2(n, 0.0);  // Welford over all n radial masses
    std::vector<double> radial(n);
    for (long long k = 0; k < mc.samples; ++k) {
        const auto sigma = sampler.sample(rng);
        double s1, s2;
        p.radial_pair(sigma, s1, s2);
        radial[0] = s1;
        radial[1] = s2;
        for (int i = 0; i < p.dim; ++i) radial[i + 2] = sigma[i];
        const double w_k = 1.0 / static_cast<double>(k + 1);
        for (int i = 0; i < n; ++i) {
            const double d = radial[i] - mean[i];
            mean[i] += d * w_k;
            m2[i] += d * (radial[i] - mean[i]);
        }
    }
    QValues qv;
    qv.exact = false;
    qv.mc_samples = mc.samples;
    qv.q.assign(s.N(), 0.0);
    qv.std_errors.assign(s.N(), 0.0);
    for (int i = 0; i < n; ++i) {
        qv.q[2 * i] = qv.q[2 * i + 1] = 0.5 * mean[i];
        const double var = m2[i] / std::max<long long>(1, mc.samples - 1);
        const double se = 0.5 * std::sqrt(var / static_cast<double>(mc.samples));
        qv.std_errors[2 * i] = qv.std_errors[2 * i + 1] = se;
    }
    double box_vol = 1.0;
    for (double b : p.box_hi) box_vol *= b;
    qv.volume = sampler.hit_and_run_engaged()
                    ? std::numeric_limits<double>::quiet_NaN()
                    : box_vol * sampler.measured_acceptance();
    return qv;
}

QRayTable::QRayTable(const Spectrum& s, std::vector<double> ratios)
    : spec_(&s), ratios_(std::move(ratios)) {
    if (ratios_.empty()) throw RatioOutOfRange("empty ratio grid");
    for (std::size_t i = 0; i < ratios_.size(); ++i) {
        if (ratios_[i] < 1.0 || ratios_[i] > s.lambda_max()) {
            throw RatioOutOfRange("ratio " + std::to_string(ratios_[i]) + " outside [1, " +
                                  std::to_string(s.lambda_max()) + "]");
        }
        if (i > 0 && ratios_[i] <= ratios_[i - 1]) {
            throw RatioOutOfRange("ratio grid must be sorted strictly increasing");
        }
    }
    rows_.reserve(ratios_.size());
    sectors_.reserve(ratios_.size());
    for (double r : ratios_) {
        const ConePoint w{r, 1.0};
        QValues qv = q_values(w, s);
        rows_.push_back(qv.q);
        volumes_.push_back(qv.volume);
        sectors_.push_back(cone_sector(w, s));
    }
}

QRayTable QRayTable::uniform(const Spectrum& s, int grid_size) {
    std::vector<double> ratios(grid_size);
    const double lo = 1.0, hi = s.lambda_max();
    for (int i = 0; i < grid_size; ++i) {
        ratios[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    }
    ratios.back() = hi;
    return QRayTable(s, std::move(ratios));
}

void QRayTable::eval(double u, double v, double* q_out) const {
    const int N = spec_->N();
    if (v <= 0.0) {
        for (int l = 0; l < N; ++l) q_out[l] = 0.0;
        return;
    }
    double r = u / v;
    r = std::clamp(r, ratios_.front(), ratios_.back());
    auto it = std::upper_bound(ratios_.begin(), ratios_.end(), r);
    std::size_t hi = std::min<std::size_t>(ratios_.size() - 1,
                                           static_cast<std::size_t>(it - ratios_.begin()));
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double span = ratios_[hi] - ratios_[lo];
    const double t = span > 0.0 ? (r - ratios_[lo]) / span : 0.0;
    for (int l = 0; l < N; ++l) {
        q_out[l] = v * ((1.0 - t) * rows_[lo][l] + t * rows_[hi][l]);
    }
}

}  // namespace coneflow
