#pragma once

#include <array>
#include <optional>
#include <vector>

namespace coneflow {

// Paired eigenvalue ladder. Each of the n distinct values mu_1 < ... < mu_n
// appears twice in lambda (lambda_{2i-1} = lambda_{2i} = mu_i), and the
// ladder is normalized so mu_1 = 1. Indices are 0-based in code; mode 2i and
// 2i+1 belong to pair i.
class Spectrum {
  public:
    struct TorusSource {
        double aspect;                                // x-period / y-period, in (0,1]
        std::vector<std::array<int, 2>> wavevectors;  // sorted by eigenvalue, one per pair
        std::vector<double> raw_eigenvalues;          // (kx/aspect)^2 + ky^2, sorted
    };

    // Thin-torus Laplacian spectrum. Raw eigenvalues (kx/aspect)^2 + ky^2 are
    // normalized by the smallest so the ladder starts at 1; the wavevectors
    // are stored sorted together with their eigenvalues.
    static Spectrum torus(double aspect, std::vector<std::array<int, 2>> wavevectors);

    // Explicit ladder from the n distinct values; mu must be strictly
    // increasing with mu[0] == 1.
    static Spectrum explicit_list(std::vector<double> mu);

    int n() const { return static_cast<int>(mu_.size()); }
    int N() const { return 2 * n(); }

    const std::vector<double>& mu() const { return mu_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const std::vector<double>& inv_lambda() const { return inv_lambda_; }
    double lambda_max() const { return mu_.back(); }

    double lambda_of(int mode) const { return lambda_[mode]; }
    int pair_of(int mode) const { return mode / 2; }

    bool torus_sourced() const { return torus_.has_value(); }
    const TorusSource& torus_source() const;

  private:
    Spectrum() = default;
    void finalize();

    std::vector<double> mu_;
    std::vector<double> lambda_;
    std::vector<double> inv_lambda_;
    std::optional<TorusSource> torus_;
};

}  // namespace coneflow
