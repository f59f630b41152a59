#pragma once

#include <array>
#include <vector>

#include "coneflow/rng.hpp"

namespace coneflow {

struct MeanSE {
    double mean = 0.0;
    double se = 0.0;
};

// Batch-means estimate of the mean of a correlated series: the series is cut
// into n_batches equal batches (tail dropped) and the SE is the spread of the
// batch means. Throws TooShort when fewer than 2 samples per batch remain.
MeanSE batch_means(const std::vector<double>& series, int n_batches = 32);

// Integrated autocorrelation time with a self-consistent window (smallest W
// with W >= 5 * tau_W, capped at n/4). Returns >= 1, in sample units.
double integrated_autocorr_time(const std::vector<double>& series);

// Batch length (in samples) required by the estimator health check
// batch_len >= 50 * tau; exposed so callers can flag undersized batches.
bool batches_resolve_autocorrelation(const std::vector<double>& series, int n_batches = 32);

struct EnergyDistance {
    double distance = 0.0;
    double se = 0.0;
    int n_a = 0, n_b = 0;  // sizes after thinning
};

// V-statistic energy distance between two 2-d samples:
//   2 E|a-b| - E|a-a'| - E|b-b'|
// over all pairs of the (stride-thinned) sets, so identical inputs give zero
// exactly and the statistic is symmetric. SE by bootstrap over 200 resamples.
// Throws TooFewSamples below 100 points per side.
EnergyDistance energy_distance(const std::vector<std::array<double, 2>>& a,
                               const std::vector<std::array<double, 2>>& b, RngStream& rng,
                               int max_points = 1024, int n_boot = 200);

// least-squares slope of y over x
double linear_slope(const std::vector<double>& x, const std::vector<double>& y);

MeanSE mean_se_iid(const std::vector<double>& series);

// sample excess kurtosis with its large-sample standard error
MeanSE excess_kurtosis(const std::vector<double>& series);

}  // namespace coneflow
