#include "coneflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "coneflow/errors.hpp"

namespace coneflow {

MeanSE batch_means(const std::vector<double>& series, int n_batches) {
    const std::size_t n = series.size();
    if (n < static_cast<std::size_t>(2 * n_batches)) {
        throw TooShort("batch means needs at least " + std::to_string(2 * n_batches) +
                       " samples, got " + std::to_string(n));
    }
    const std::size_t len = n / n_batches;
    std::vector<double> bm(n_batches, 0.0);
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < len; ++i) s += series[b * len + i];
        bm[b] = s / static_cast<double>(len);
    }
    double mean = std::accumulate(bm.begin(), bm.end(), 0.0) / n_batches;
    double var = 0.0;
    for (double v : bm) var += (v - mean) * (v - mean);
    var /= (n_batches - 1);
    return {mean, std::sqrt(var / n_batches)};
}

double integrated_autocorr_time(const std::vector<double>& series) {
    const std::size_t n = series.size();
    if (n < 8) return 1.0;
    double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double c0 = 0.0;
    for (double v : series) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(n);
    if (c0 <= 0.0) return 1.0;

    const std::size_t max_lag = n / 4;
    double tau = 1.0;
    for (std::size_t w = 1; w <= max_lag; ++w) {
        double ck = 0.0;
        for (std::size_t i = 0; i + w < n; ++i) {
            ck += (series[i] - mean) * (series[i + w] - mean);
        }
        ck /= static_cast<double>(n - w);
        tau += 2.0 * ck / c0;
        if (static_cast<double>(w) >= 5.0 * tau) break;
    }
    return std::max(1.0, tau);
}

bool batches_resolve_autocorrelation(const std::vector<double>& series, int n_batches) {
    const double tau = integrated_autocorr_time(series);
    const double batch_len = static_cast<double>(series.size()) / n_batches;
    return batch_len >= 50.0 * tau;
}

namespace {

inline double dist2(const std::array<double, 2>& p, const std::array<double, 2>& q) {
    const double dx = p[0] - q[0], dy = p[1] - q[1];
    return std::sqrt(dx * dx + dy * dy);
}

std::vector<std::array<double, 2>> thin(const std::vector<std::array<double, 2>>& s,
                                        int max_points) {
    const std::size_t n = s.size();
    if (n <= static_cast<std::size_t>(max_points)) return s;
    std::vector<std::array<double, 2>> out;
    out.reserve(max_points);
    const double stride = static_cast<double>(n) / max_points;
    for (int i = 0; i < max_points; ++i) {
        out.push_back(s[static_cast<std::size_t>(i * stride)]);
    }
    return out;
}

// mean over D[idx_r][idx_c] for index subsets (full matrices precomputed)
double submean(const std::vector<double>& d, int cols, const std::vector<int>& rows,
               const std::vector<int>& cs) {
    double s = 0.0;
    for (int r : rows) {
        const double* row = d.data() + static_cast<std::size_t>(r) * cols;
        for (int c : cs) s += row[c];
    }
    return s / (static_cast<double>(rows.size()) * static_cast<double>(cs.size()));
}

}  // namespace

EnergyDistance energy_distance(const std::vector<std::array<double, 2>>& a_in,
                               const std::vector<std::array<double, 2>>& b_in, RngStream& rng,
                               int max_points, int n_boot) {
    if (a_in.size() < 100 || b_in.size() < 100) {
        throw TooFewSamples("energy distance needs at least 100 samples per side");
    }
    const auto a = thin(a_in, max_points);
    const auto b = thin(b_in, max_points);
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());

    std::vector<double> dab(static_cast<std::size_t>(na) * nb);
    std::vector<double> daa(static_cast<std::size_t>(na) * na);
    std::vector<double> dbb(static_cast<std::size_t>(nb) * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) dab[static_cast<std::size_t>(i) * nb + j] = dist2(a[i], b[j]);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j) daa[static_cast<std::size_t>(i) * na + j] = dist2(a[i], a[j]);
    for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) dbb[static_cast<std::size_t>(i) * nb + j] = dist2(b[i], b[j]);

    // the cross term is accumulated in both traversal orders and averaged so
    // that swapping the arguments reproduces the value bit for bit
    double sab_rows = 0.0, sab_cols = 0.0;
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) sab_rows += dab[static_cast<std::size_t>(i) * nb + j];
    for (int j = 0; j < nb; ++j)
        for (int i = 0; i < na; ++i) sab_cols += dab[static_cast<std::size_t>(i) * nb + j];
    const double sab = 0.5 * (sab_rows + sab_cols) / (static_cast<double>(na) * nb);
    const double saa =
        std::accumulate(daa.begin(), daa.end(), 0.0) / (static_cast<double>(na) * na);
    const double sbb =
        std::accumulate(dbb.begin(), dbb.end(), 0.0) / (static_cast<double>(nb) * nb);

    EnergyDistance out;
    out.distance = 2.0 * sab - (saa + sbb);
    out.n_a = na;
    out.n_b = nb;

    // bootstrap over joint resampling of both sides
    std::vector<double> reps(n_boot);
    std::vector<int> ia(na), ib(nb);
    for (int r = 0; r < n_boot; ++r) {
        for (int i = 0; i < na; ++i) ia[i] = static_cast<int>(rng.uniform_index(na));
        for (int i = 0; i < nb; ++i) ib[i] = static_cast<int>(rng.uniform_index(nb));
        const double sab = submean(dab, nb, ia, ib);
        const double saa = submean(daa, na, ia, ia);
        const double sbb = submean(dbb, nb, ib, ib);
        reps[r] = 2.0 * sab - saa - sbb;
    }
    double m = std::accumulate(reps.begin(), reps.end(), 0.0) / n_boot;
    double var = 0.0;
    for (double v : reps) var += (v - m) * (v - m);
    out.se = std::sqrt(var / (n_boot - 1));
    return out;
}

double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

MeanSE mean_se_iid(const std::vector<double>& series) {
    const std::size_t n = series.size();
    double m = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : series) var += (v - m) * (v - m);
    var /= static_cast<double>(n - 1);
    return {m, std::sqrt(var / static_cast<double>(n))};
}

MeanSE excess_kurtosis(const std::vector<double>& series) {
    const std::size_t n = series.size();
    double m = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
    double m2 = 0.0, m4 = 0.0;
    for (double v : series) {
        const double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);
    const double g2 = m4 / (m2 * m2) - 3.0;
    // large-sample SE of excess kurtosis under normality
    const double se = std::sqrt(24.0 / static_cast<double>(n));
    return {g2, se};
}

}  // namespace coneflow
