#pragma once

#include <span>
#include <vector>

namespace cadro {

struct PearsonResult {
    double r{0.0};
    double p{1.0}; // two-sided
};

/// Sample correlation with a Student-t(n-2) p-value. A constant input gives
/// r = 0, p = 1. Throws Error("insufficient data") for n < 3.
auto pearson(std::span<const double> x, std::span<const double> y) -> PearsonResult;

struct WelchResult {
    double t{0.0};
    double df{0.0};
    double p{1.0}; // two-sided
};

/// Welch's unequal-variance t-test of mean(a) vs mean(b). When both samples
/// have zero variance the test is decided by whether the means are equal.
auto welch_t_test(std::span<const double> a, std::span<const double> b) -> WelchResult;

/// Linear-interpolation percentile, q in [0, 100].
auto percentile(std::span<const double> values, double q) -> double;

/// Equal-frequency bin labels in [0, bins'). Tied values always share a bin;
/// `bins'` is reduced to the number of distinct values when that is smaller.
/// Returns the labels and the effective bin count.
auto quantile_bins(std::span<const double> x, std::size_t bins) -> std::pair<std::vector<std::size_t>, std::size_t>;

/// Plug-in mutual information (bits) of quantile-binned x and y, divided by
/// log2 of the smaller effective bin count and clipped to [0, 1].
auto mutual_info(std::span<const double> x, std::span<const double> y, std::size_t bins) -> double;

} // namespace cadro
