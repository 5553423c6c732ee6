#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cadro/stats.hpp"
#include "helpers.hpp"

using namespace cadro;

namespace {

/// Two-sided Student-t tail by Simpson integration of the density over [0, |t|].
auto t_two_sided(double t, double df) -> double
{
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
    const auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
    const int n = 20000;
    const double h = std::abs(t) / n;
    double s = pdf(0) + pdf(std::abs(t));
    for (int i = 1; i < n; ++i) { s += (i % 2 == 1 ? 4 : 2) * pdf(i * h); }
    return 1.0 - 2.0 * s * h / 3.0;
}

auto mean(const std::vector<double>& v) -> double
{
    double s = 0;
    for (double x : v) { s += x; }
    return s / static_cast<double>(v.size());
}

auto var(const std::vector<double>& v) -> double
{
    const double m = mean(v);
    double s = 0;
    for (double x : v) { s += (x - m) * (x - m); }
    return s / static_cast<double>(v.size() - 1);
}

} // namespace

TEST_SUITE("stats")
{
    TEST_CASE("pearson examples")
    {
        using V = std::vector<double>;
        CHECK(pearson(V{1, 2, 3}, V{2, 4, 6}).r == doctest::Approx(1.0));
        CHECK(pearson(V{1, 2, 3}, V{6, 4, 2}).r == doctest::Approx(-1.0));
        CHECK(pearson(V{1, 2, 3, 4}, V{1, 3, 2, 4}).r == doctest::Approx(0.8).epsilon(1e-12));
        const auto flat = pearson(V{1, 2, 3, 4}, V{5, 5, 5, 5});
        CHECK(flat.r == 0.0);
        CHECK(flat.p == 1.0);
        CHECK_THROWS_AS((void)pearson(V{1, 2}, V{1, 2}), Error);
        CHECK_THROWS_AS((void)pearson(V{1, 2, 3}, V{1, 2}), Error);
    }

    TEST_CASE("pearson p-value matches the t-distribution oracle")
    {
        Rng rng(3);
        for (int t = 0; t < 30; ++t) {
            const std::size_t n = 5 + uniform_index(rng, 60);
            std::vector<double> x(n);
            std::vector<double> y(n);
            const double slope = uniform(rng, -0.5, 0.5);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = uniform01(rng);
                y[i] = slope * x[i] + 0.3 * standard_normal(rng);
            }
            const auto r = pearson(x, y);
            const double ts = r.r * std::sqrt((n - 2.0) / (1.0 - r.r * r.r));
            CHECK(r.p == doctest::Approx(t_two_sided(ts, n - 2.0)).epsilon(1e-6));
            auto neg = y;
            for (auto& v : neg) { v = -v; }
            const auto rn = pearson(x, neg);
            CHECK(rn.r == doctest::Approx(-r.r).epsilon(1e-12));
            CHECK(rn.p == doctest::Approx(r.p).epsilon(1e-12));
            CHECK(pearson(y, x).r == doctest::Approx(r.r).epsilon(1e-12));
        }
    }

    TEST_CASE("welch test")
    {
        Rng rng(4);
        for (int t = 0; t < 20; ++t) {
            std::vector<double> a(10 + t);
            std::vector<double> b(25 - t / 2);
            for (auto& v : a) { v = 1.0 + 2.0 * standard_normal(rng); }
            for (auto& v : b) { v = 0.2 * t + 0.5 * standard_normal(rng); }
            const auto w = welch_t_test(a, b);
            const double va = var(a) / a.size();
            const double vb = var(b) / b.size();
            const double ts = (mean(a) - mean(b)) / std::sqrt(va + vb);
            const double df = (va + vb) * (va + vb) / (va * va / (a.size() - 1.0) + vb * vb / (b.size() - 1.0));
            CHECK(w.t == doctest::Approx(ts).epsilon(1e-10));
            CHECK(w.df == doctest::Approx(df).epsilon(1e-10));
            CHECK(w.p == doctest::Approx(t_two_sided(ts, df)).epsilon(1e-6));
        }
        using V = std::vector<double>;
        CHECK(welch_t_test(V{1, 1, 1}, V{1, 1, 1}).p == 1.0);
        CHECK(welch_t_test(V{1, 1, 1}, V{2, 2, 2}).p == 0.0);
    }

    TEST_CASE("percentile")
    {
        using V = std::vector<double>;
        CHECK(percentile(V{1, 2, 3, 4, 5}, 50) == 3.0);
        CHECK(percentile(V{4, 1, 3, 2}, 25) == doctest::Approx(1.75));
        CHECK(percentile(V{0, 1}, 75) == doctest::Approx(0.75));
        CHECK(percentile(V{7}, 10) == 7.0);
        CHECK(percentile(V{1, 2}, 0) == 1.0);
        CHECK(percentile(V{1, 2}, 100) == 2.0);
    }

    TEST_CASE("quantile bins")
    {
        using V = std::vector<double>;
        const auto [labels, k] = quantile_bins(V{1, 2, 3, 4, 5, 6, 7, 8}, 4);
        CHECK(k == 4);
        CHECK(labels == std::vector<std::size_t>{0, 0, 1, 1, 2, 2, 3, 3});
        const auto [l2, k2] = quantile_bins(V{1, 1, 1, 2, 2, 2}, 4);
        CHECK(k2 <= 2);
        CHECK(l2[0] == l2[1]);
        CHECK(l2[3] == l2[5]);
        CHECK(l2[0] != l2[3]);
        const auto [l3, k3] = quantile_bins(V{5, 5, 5}, 8);
        CHECK(k3 == 1);
        CHECK(l3 == std::vector<std::size_t>{0, 0, 0});
        Rng rng(6);
        std::vector<double> x(500);
        for (auto& v : x) { v = std::floor(10 * uniform01(rng)); }
        const auto [l4, k4] = quantile_bins(x, 6);
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(l4[i] < k4);
            for (std::size_t j = 0; j < i; ++j) {
                if (x[i] == x[j]) { CHECK(l4[i] == l4[j]); }
                if (x[i] < x[j]) { CHECK(l4[i] <= l4[j]); }
            }
        }
    }

    TEST_CASE("mutual information")
    {
        Rng rng(7);
        const std::size_t n = 10000;
        std::vector<double> x(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = uniform01(rng);
            y[i] = uniform01(rng);
        }
        CHECK(mutual_info(x, x, 4) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(mutual_info(x, y, 8) < 0.05);
        CHECK(mutual_info(x, std::vector<double>(n, 3.0), 8) == 0.0);
        CHECK(mutual_info(x, y, 8) == doctest::Approx(mutual_info(y, x, 8)).epsilon(1e-12));
        std::vector<double> sq(n);
        for (std::size_t i = 0; i < n; ++i) { sq[i] = (x[i] - 0.5) * (x[i] - 0.5); }
        CHECK(mutual_info(x, sq, 8) > 0.3);
        CHECK(std::abs(pearson(x, sq).r) < 0.1);
    }
}
