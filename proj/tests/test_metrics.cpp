#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cadro/metrics.hpp"
#include "helpers.hpp"

using namespace cadro;

namespace {

using Pts = std::vector<std::vector<double>>;

/// Exact dominated volume by cell decomposition on the compressed grid of coordinates.
auto cell_oracle(const Pts& front, const std::vector<double>& ref) -> double
{
    const auto m = ref.size();
    std::vector<std::vector<double>> axes(m);
    for (std::size_t k = 0; k < m; ++k) {
        axes[k].push_back(ref[k]);
        for (const auto& p : front) {
            if (p[k] < ref[k]) { axes[k].push_back(p[k]); }
        }
        std::sort(axes[k].begin(), axes[k].end());
        axes[k].erase(std::unique(axes[k].begin(), axes[k].end()), axes[k].end());
    }
    double total = 0.0;
    std::vector<std::size_t> idx(m, 0);
    while (true) {
        bool valid = true;
        for (std::size_t k = 0; k < m; ++k) { valid = valid && idx[k] + 1 < axes[k].size(); }
        if (valid) {
            const bool covered = std::any_of(front.begin(), front.end(), [&](const auto& p) {
                for (std::size_t k = 0; k < m; ++k) {
                    if (p[k] > axes[k][idx[k]]) { return false; }
                }
                return true;
            });
            if (covered) {
                double v = 1.0;
                for (std::size_t k = 0; k < m; ++k) { v *= axes[k][idx[k] + 1] - axes[k][idx[k]]; }
                total += v;
            }
        }
        std::size_t k = 0;
        while (k < m && ++idx[k] >= axes[k].size()) { idx[k++] = 0; }
        if (k == m) { break; }
    }
    return total;
}

/// Inclusion-exclusion over all subsets; each intersection is the box at the componentwise max.
auto inclusion_exclusion(const Pts& front, const std::vector<double>& ref) -> double
{
    const auto n = front.size();
    double total = 0.0;
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        std::vector<double> corner(ref.size(), -1e300);
        for (std::size_t i = 0; i < n; ++i) {
            if ((mask >> i) & 1U) {
                for (std::size_t k = 0; k < ref.size(); ++k) { corner[k] = std::max(corner[k], front[i][k]); }
            }
        }
        double v = 1.0;
        for (std::size_t k = 0; k < ref.size(); ++k) { v *= std::max(0.0, ref[k] - corner[k]); }
        total += (std::popcount(mask) % 2 == 1 ? 1.0 : -1.0) * v;
    }
    return total;
}

} // namespace

TEST_SUITE("metrics")
{
    TEST_CASE("hypervolume examples")
    {
        const std::vector<double> ref{1.0, 1.0};
        CHECK(hypervolume(Pts{{0.5, 0.5}}, ref) == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(hypervolume(Pts{{0.25, 0.75}, {0.75, 0.25}}, ref) == doctest::Approx(0.3125).epsilon(1e-12));
        CHECK(hypervolume(Pts{{0.25, 0.75}, {0.75, 0.25}, {0.8, 0.8}}, ref) == doctest::Approx(0.3125).epsilon(1e-12));
        CHECK(hypervolume(Pts{}, ref) == 0.0);
        CHECK(hypervolume(Pts{{1.5, 0.5}}, ref) == 0.0);
    }

    TEST_CASE("exact 2D and 3D match independent oracles")
    {
        Rng rng(31);
        for (int t = 0; t < 200; ++t) {
            const std::size_t m = t % 2 == 0 ? 2 : 3;
            const auto n = 1 + uniform_index(rng, 7);
            const auto front = t % 3 == 0 ? testing::grid_points(rng, n, m, 4) : testing::random_points(rng, n, m);
            const std::vector<double> ref(m, t % 3 == 0 ? 4.0 : 1.1);
            const double oracle = cell_oracle(front, ref);
            CHECK(inclusion_exclusion(front, ref) == doctest::Approx(oracle).epsilon(1e-9));
            CHECK(hypervolume(front, ref) == doctest::Approx(oracle).epsilon(1e-9));
        }
    }

    TEST_CASE("hypervolume properties")
    {
        Rng rng(32);
        for (int t = 0; t < 100; ++t) {
            const std::size_t m = 2 + t % 2;
            auto front = non_dominated(testing::random_points(rng, 15, m));
            const std::vector<double> ref(m, 1.1);
            const double hv = hypervolume(front, ref);
            auto shuffled = front;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            CHECK(hypervolume(shuffled, ref) == doctest::Approx(hv).epsilon(1e-12));
            auto more = front;
            more.push_back(testing::random_points(rng, 1, m)[0]);
            CHECK(hypervolume(more, ref) >= hv - 1e-12);
        }
    }

    TEST_CASE("monte carlo agrees with exact and is thread-count independent")
    {
        Rng rng(33);
        int within = 0;
        for (int t = 0; t < 40; ++t) {
            const std::size_t m = 2 + t % 2;
            const auto front = non_dominated(testing::random_points(rng, 10, m));
            const std::vector<double> ref(m, 1.1);
            const auto est = hypervolume_monte_carlo(front, ref, 100000, 1000 + t);
            const auto ser = serial::hypervolume_monte_carlo(front, ref, 100000, 1000 + t);
            CHECK(est.value == ser.value);
            CHECK(est.std_error == ser.std_error);
            within += std::abs(est.value - hypervolume(front, ref)) <= 3.0 * est.std_error ? 1 : 0;
        }
        CHECK(within >= 38);
        const auto four = non_dominated(testing::random_points(rng, 10, 4));
        const auto e4 = hypervolume_estimate(four, std::vector<double>(4, 1.1));
        CHECK(e4.std_error > 0.0);
        CHECK(e4.value == doctest::Approx(cell_oracle(four, std::vector<double>(4, 1.1))).epsilon(5.0 * e4.std_error));
    }

    TEST_CASE("exclusive contributions")
    {
        const auto c = exclusive_contributions(Pts{{0.1, 0.9}, {0.5, 0.5}, {0.9, 0.1}}, std::vector{1.1, 1.1});
        REQUIRE(c.size() == 3);
        CHECK(c[0] == doctest::Approx(0.08).epsilon(1e-12));
        CHECK(c[1] == doctest::Approx(0.16).epsilon(1e-12));
        CHECK(c[2] == doctest::Approx(0.08).epsilon(1e-12));
        Rng rng(34);
        const auto front = non_dominated(testing::random_points(rng, 6, 3));
        const std::vector<double> ref(3, 1.1);
        const auto ex = exclusive_contributions(front, ref);
        for (std::size_t i = 0; i < front.size(); ++i) {
            auto rest = front;
            rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
            CHECK(ex[i] == doctest::Approx(cell_oracle(front, ref) - cell_oracle(rest, ref)).epsilon(1e-9));
        }
    }

    TEST_CASE("distance metrics")
    {
        const Pts ref{{0.0, 1.0}, {1.0, 0.0}};
        CHECK(gd(Pts{{0.1, 1.0}}, ref) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(igd(Pts{{0.1, 1.0}}, ref) == doctest::Approx((0.1 + std::sqrt(0.81 + 1.0)) / 2.0).epsilon(1e-12));
        CHECK(gd(ref, ref) == 0.0);
        CHECK(igd(ref, ref) == 0.0);
        CHECK(epsilon_additive(ref, ref) == 0.0);
        CHECK(epsilon_additive(Pts{{0.2, 0.2}}, Pts{{0.1, 0.1}}) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(epsilon_additive(Pts{{0.0, 0.0}}, Pts{{0.1, 0.1}, {0.2, 0.05}}) <= 0.0);
        CHECK_THROWS_AS((void)gd(Pts{}, ref), Error);
        CHECK_THROWS_AS((void)igd(ref, Pts{}), Error);
        CHECK_THROWS_AS((void)epsilon_additive(Pts{}, ref), Error);
    }

    TEST_CASE("spacing and spread")
    {
        CHECK(spacing(Pts{{0, 0}, {1, 0}, {3, 0}}) == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-12));
        CHECK(spacing(Pts{{0, 0}, {1, 0}}) == 0.0);
        CHECK(spacing(Pts{{0, 0}}) == 0.0);
        CHECK(spacing(Pts{{0, 3}, {1, 2}, {2, 1}, {3, 0}}) == doctest::Approx(0.0));

        Pts line;
        for (int i = 0; i <= 10; ++i) { line.push_back({i / 10.0, 1.0 - i / 10.0}); }
        CHECK(delta_spread(line, line) == doctest::Approx(0.0));
        CHECK(max_spread(line, line) == doctest::Approx(1.0));
        CHECK(max_spread(Pts{{0.25, 0.75}, {0.75, 0.25}}, Pts{{0.0, 1.0}, {1.0, 0.0}}) == doctest::Approx(0.5));
        CHECK(delta_spread(Pts{{0.5, 0.5}}, line) == 1.0);
        CHECK(max_spread(Pts{{0.5, 0.5}}, line) == 0.0);
    }

    TEST_CASE("coverage")
    {
        CHECK(coverage(Pts{{0, 0}}, Pts{{1, 1}, {0, -1}}) == doctest::Approx(0.5));
        CHECK(coverage(Pts{{0, 0}}, Pts{{1, 1}, {2, 1}}) == 1.0);
        CHECK(coverage(Pts{{0, 1}, {1, 0}}, Pts{{0, 1}, {1, 0}}) == 0.0);
        CHECK_THROWS_AS((void)coverage(Pts{{0, 0}}, Pts{}), Error);
        // Both directions can be large at once when the fronts interleave.
        const Pts a{{0, 10}, {5, 5}, {6, 4}};
        const Pts b{{1, 11}, {4, 3}};
        CHECK(coverage(a, b) == doctest::Approx(0.5));
        CHECK(coverage(b, a) == doctest::Approx(2.0 / 3.0));
        // Full coverage one way excludes any coverage the other way.
        Rng rng(35);
        int full = 0;
        for (int t = 0; t < 400; ++t) {
            const auto x = non_dominated(testing::random_points(rng, 6, 2));
            const auto y = non_dominated(testing::random_points(rng, 6, 2, 0.3, 1.3));
            if (coverage(x, y) == 1.0) {
                ++full;
                CHECK(coverage(y, x) == 0.0);
            }
        }
        CHECK(full > 0);
    }

    TEST_CASE("metrics are order invariant")
    {
        Rng rng(36);
        const auto ref = non_dominated(testing::random_points(rng, 30, 2));
        auto front = non_dominated(testing::random_points(rng, 12, 2));
        const double g = gd(front, ref);
        const double i = igd(front, ref);
        const double e = epsilon_additive(front, ref);
        const double s = spacing(front);
        const double d = delta_spread(front, ref);
        std::reverse(front.begin(), front.end());
        CHECK(gd(front, ref) == doctest::Approx(g));
        CHECK(igd(front, ref) == doctest::Approx(i));
        CHECK(epsilon_additive(front, ref) == doctest::Approx(e));
        CHECK(spacing(front) == doctest::Approx(s));
        CHECK(delta_spread(front, ref) == doctest::Approx(d));
    }

    TEST_CASE("non_dominated collapses duplicates")
    {
        const auto nd = non_dominated(Pts{{1, 2}, {1, 2}, {2, 1}, {3, 3}});
        CHECK(nd.size() == 2);
    }

    TEST_CASE("compare_fronts")
    {
        const auto problem = testing::unit_problem(2, 2);
        const Pts a{{0.0, 1.0}, {0.5, 0.5}, {1.0, 0.0}};
        const Pts b{{0.2, 1.2}, {1.2, 0.2}};
        const auto r = compare_fronts(a, b, problem, {}, 10, 20);
        CHECK(r.a.cardinality == 3);
        CHECK(r.b.cardinality == 2);
        CHECK(r.a.sim_count == 10);
        CHECK(r.b.sim_count == 20);
        CHECK(r.a.hypervolume > r.b.hypervolume);
        CHECK(r.a.gd == doctest::Approx(0.0));
        CHECK(r.a.coverage == 1.0);
        CHECK(r.b.coverage == 0.0);
        CHECK_FALSE(r.analytic_reference);
        const nlohmann::json j = r;
        CHECK(j["a"].contains("eps_additive"));
        CHECK(j["b"].contains("max_spread"));
        const auto table = format_comparison_table(r, "A", "B");
        CHECK(table.find("A") != std::string::npos);

        auto maxp = problem;
        maxp.objectives[1].direction = Direction::Maximize;
        const Pts am{{0.0, -1.0}, {0.5, -0.5}, {1.0, 0.0}};
        const Pts bm{{0.2, -1.2}, {1.2, -0.2}};
        const auto rm = compare_fronts(am, bm, maxp);
        CHECK(rm.a.hypervolume == doctest::Approx(r.a.hypervolume));
        CHECK(rm.b.igd == doctest::Approx(r.b.igd));

        const auto withknown = compare_fronts(a, b, problem, a);
        CHECK(withknown.analytic_reference);
        CHECK(withknown.reference_size == 3);
    }
}
