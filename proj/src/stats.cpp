#include "cadro/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "cadro/problem.hpp"

namespace cadro {

namespace {

auto mean(std::span<const double> v) -> double
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

auto two_sided_t(double t, double df) -> double
{
    if (!std::isfinite(t)) { return 0.0; }
    const boost::math::students_t dist(df);
    return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

} // namespace

auto pearson(std::span<const double> x, std::span<const double> y) -> PearsonResult
{
    if (x.size() != y.size()) { throw Error("pearson on vectors of different length"); }
    const auto n = x.size();
    if (n < 3) { throw Error("insufficient data"); }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) { return {0.0, 1.0}; }
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    if (std::abs(r) >= 1.0) { return {r, 0.0}; }
    const double df = static_cast<double>(n - 2);
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return {r, two_sided_t(t, df)};
}

auto welch_t_test(std::span<const double> a, std::span<const double> b) -> WelchResult
{
    if (a.size() < 2 || b.size() < 2) { throw Error("insufficient data"); }
    const double ma = mean(a);
    const double mb = mean(b);
    auto var = [](std::span<const double> v, double m) {
        double s = 0.0;
        for (double x : v) { s += (x - m) * (x - m); }
        return s / static_cast<double>(v.size() - 1);
    };
    const double va = var(a, ma) / static_cast<double>(a.size());
    const double vb = var(b, mb) / static_cast<double>(b.size());
    const double se2 = va + vb;
    if (!(se2 > 0.0)) {
        if (ma == mb) { return {0.0, 0.0, 1.0}; }
        return {ma > mb ? INFINITY : -INFINITY, 0.0, 0.0};
    }
    const double t = (ma - mb) / std::sqrt(se2);
    const double df = se2 * se2
                      / (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    return {t, df, two_sided_t(t, df)};
}

auto percentile(std::span<const double> values, double q) -> double
{
    if (values.empty()) { throw Error("percentile of an empty set"); }
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

auto quantile_bins(std::span<const double> x, std::size_t bins) -> std::pair<std::vector<std::size_t>, std::size_t>
{
    const auto n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || x[order[i]] != x[order[i - 1]]) { ++distinct; }
    }
    const auto k = std::max<std::size_t>(1, std::min(bins, distinct));
    std::vector<std::size_t> label(n, 0);
    // A tie group takes the bin of its first rank; labels are then compacted.
    std::size_t group_bin = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || x[order[i]] != x[order[i - 1]]) { group_bin = i * k / n; }
        label[order[i]] = group_bin;
    }
    std::vector<std::size_t> remap(k, k);
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = remap[label[order[i]]];
        if (r == k) { r = used++; }
    }
    for (auto& l : label) { l = remap[l]; }
    return {label, used};
}

auto mutual_info(std::span<const double> x, std::span<const double> y, std::size_t bins) -> double
{
    if (x.size() != y.size()) { throw Error("mutual_info on vectors of different length"); }
    if (bins < 2) { throw Error("mutual_info needs at least 2 bins"); }
    const auto n = x.size();
    if (n == 0) { return 0.0; }
    const auto [bx, kx] = quantile_bins(x, bins);
    const auto [by, ky] = quantile_bins(y, bins);
    const auto k = std::min(kx, ky);
    if (k < 2) { return 0.0; }
    std::vector<double> joint(kx * ky, 0.0);
    std::vector<double> px(kx, 0.0);
    std::vector<double> py(ky, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[bx[i] * ky + by[i]] += 1.0;
        px[bx[i]] += 1.0;
        py[by[i]] += 1.0;
    }
    const double total = static_cast<double>(n);
    double mi = 0.0;
    for (std::size_t a = 0; a < kx; ++a) {
        for (std::size_t b = 0; b < ky; ++b) {
            const double c = joint[a * ky + b];
            if (c > 0.0) { mi += c / total * std::log2(c * total / (px[a] * py[b])); }
        }
    }
    return std::clamp(mi / std::log2(static_cast<double>(k)), 0.0, 1.0);
}

} // namespace cadro
