#include "coneflow/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "coneflow/errors.hpp"

namespace coneflow {

namespace {

double raw_eigenvalue(const std::array<int, 2>& k, double aspect) {
    double kx = static_cast<double>(k[0]) / aspect;
    double ky = static_cast<double>(k[1]);
    return kx * kx + ky * ky;
}

}  // namespace

Spectrum Spectrum::torus(double aspect, std::vector<std::array<int, 2>> wavevectors) {
    if (!(aspect > 0.0) || aspect > 1.0) {
        throw BadAspect("torus aspect must lie in (0,1], got " + std::to_string(aspect));
    }
    const int n = static_cast<int>(wavevectors.size());
    if (n < 4) {
        throw DegenerateSpectrum("need at least 4 wavevectors, got " + std::to_string(n));
    }
    for (const auto& k : wavevectors) {
        if (k[0] == 0 && k[1] == 0) {
            throw DegenerateSpectrum("zero wavevector is not admissible");
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (wavevectors[i] == wavevectors[j]) {
                throw DegenerateSpectrum("duplicate wavevector (" + std::to_string(wavevectors[i][0]) +
                                         "," + std::to_string(wavevectors[i][1]) + ")");
            }
        }
    }

    std::vector<double> raw(n);
    for (int i = 0; i < n; ++i) raw[i] = raw_eigenvalue(wavevectors[i], aspect);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return raw[i] < raw[j]; });

    std::vector<double> sorted_raw(n);
    std::vector<std::array<int, 2>> sorted_k(n);
    for (int i = 0; i < n; ++i) {
        sorted_raw[i] = raw[order[i]];
        sorted_k[i] = wavevectors[order[i]];
    }
    for (int i = 0; i + 1 < n; ++i) {
        if (sorted_raw[i + 1] - sorted_raw[i] <= 1e-12 * sorted_raw[i + 1]) {
            throw DegenerateSpectrum("eigenvalue collision between (" + std::to_string(sorted_k[i][0]) +
                                     "," + std::to_string(sorted_k[i][1]) + ") and (" +
                                     std::to_string(sorted_k[i + 1][0]) + "," +
                                     std::to_string(sorted_k[i + 1][1]) + ")");
        }
    }

    Spectrum s;
    s.mu_.resize(n);
    for (int i = 0; i < n; ++i) s.mu_[i] = sorted_raw[i] / sorted_raw[0];
    s.mu_[0] = 1.0;
    s.torus_ = TorusSource{aspect, std::move(sorted_k), std::move(sorted_raw)};
    s.finalize();
    return s;
}

Spectrum Spectrum::explicit_list(std::vector<double> mu) {
    const int n = static_cast<int>(mu.size());
    if (n < 4) {
        throw DegenerateSpectrum("need at least 4 eigenvalue pairs, got " + std::to_string(n));
    }
    if (mu[0] != 1.0) {
        throw DegenerateSpectrum("the ladder must start at 1, got mu[0]=" + std::to_string(mu[0]));
    }
    for (int i = 0; i + 1 < n; ++i) {
        if (!(mu[i + 1] > mu[i])) {
            throw DegenerateSpectrum("eigenvalues must be strictly increasing between pairs");
        }
    }
    Spectrum s;
    s.mu_ = std::move(mu);
    s.finalize();
    return s;
}

void Spectrum::finalize() {
    const int n = static_cast<int>(mu_.size());
    lambda_.resize(2 * n);
    inv_lambda_.resize(2 * n);
    for (int i = 0; i < n; ++i) {
        lambda_[2 * i] = mu_[i];
        lambda_[2 * i + 1] = mu_[i];
        inv_lambda_[2 * i] = 1.0 / mu_[i];
        inv_lambda_[2 * i + 1] = 1.0 / mu_[i];
    }
}

const Spectrum::TorusSource& Spectrum::torus_source() const {
    if (!torus_) throw NotTorusSourced("spectrum was built from an explicit eigenvalue list");
    return *torus_;
}

}  // namespace coneflow
