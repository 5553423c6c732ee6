#include "cadro/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "cadro/rng.hpp"

namespace cadro {

namespace {

auto strictly_inside(std::span<const double> p, std::span<const double> ref) -> bool
{
    for (std::size_t j = 0; j < ref.size(); ++j) {
        if (!(p[j] < ref[j])) { return false; }
    }
    return true;
}

auto inside_points(std::span<const std::vector<double>> front, std::span<const double> ref) -> Front
{
    Front pts;
    for (const auto& p : front) {
        if (p.size() != ref.size()) { throw Error("point and reference dimensions differ"); }
        if (strictly_inside(p, ref)) { pts.push_back(p); }
    }
    return pts;
}

auto euclidean(std::span<const double> a, std::span<const double> b) -> double
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) { s += (a[j] - b[j]) * (a[j] - b[j]); }
    return std::sqrt(s);
}

auto weakly_dominates(std::span<const double> a, std::span<const double> b) -> bool
{
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (a[j] > b[j]) { return false; }
    }
    return true;
}

constexpr std::size_t kChunk = 1U << 14U;

auto mc_chunk_hits(const Front& pts, std::span<const double> lo, std::span<const double> ref, std::size_t count,
                   std::uint64_t seed) -> std::size_t
{
    Rng rng(seed);
    std::vector<double> s(ref.size());
    std::size_t hits = 0;
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t j = 0; j < s.size(); ++j) { s[j] = uniform(rng, lo[j], ref[j]); }
        for (const auto& p : pts) {
            if (weakly_dominates(p, s)) {
                ++hits;
                break;
            }
        }
    }
    return hits;
}

auto mc_finish(std::size_t hits, std::size_t samples, double volume) -> HvEstimate
{
    const double frac = static_cast<double>(hits) / static_cast<double>(samples);
    return {volume * frac, volume * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples))};
}

struct McSetup {
    Front pts;
    std::vector<double> lo;
    double volume{1.0};
    std::size_t chunks{0};
};

auto mc_setup(std::span<const std::vector<double>> front, std::span<const double> ref, std::size_t samples) -> McSetup
{
    McSetup s;
    s.pts = inside_points(front, ref);
    if (s.pts.empty() || samples == 0) { return s; }
    s.lo.assign(ref.size(), std::numeric_limits<double>::infinity());
    for (const auto& p : s.pts) {
        for (std::size_t j = 0; j < ref.size(); ++j) { s.lo[j] = std::min(s.lo[j], p[j]); }
    }
    for (std::size_t j = 0; j < ref.size(); ++j) { s.volume *= ref[j] - s.lo[j]; }
    s.chunks = (samples + kChunk - 1) / kChunk;
    return s;
}

auto chunk_size(std::size_t c, std::size_t chunks, std::size_t samples) -> std::size_t
{
    return c + 1 < chunks ? kChunk : samples - kChunk * (chunks - 1);
}

} // namespace

auto hypervolume_2d(std::span<const std::vector<double>> front, std::span<const double> ref) -> double
{
    if (ref.size() != 2) { throw Error("hypervolume_2d needs 2 objectives"); }
    auto pts = inside_points(front, ref);
    std::sort(pts.begin(), pts.end());
    double area = 0.0;
    double ceiling = ref[1];
    for (const auto& p : pts) {
        if (p[1] < ceiling) {
            area += (ref[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    return area;
}

auto hypervolume_3d(std::span<const std::vector<double>> front, std::span<const double> ref) -> double
{
    if (ref.size() != 3) { throw Error("hypervolume_3d needs 3 objectives"); }
    auto pts = inside_points(front, ref);
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });
    const std::array<double, 2> ref2{ref[0], ref[1]};
    Front slice;
    double volume = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        slice.push_back({pts[i][0], pts[i][1]});
        const double top = i + 1 < pts.size() ? pts[i + 1][2] : ref[2];
        if (top > pts[i][2]) { volume += hypervolume_2d(slice, ref2) * (top - pts[i][2]); }
    }
    return volume;
}

auto hypervolume_monte_carlo(std::span<const std::vector<double>> front, std::span<const double> ref,
                             std::size_t samples, std::uint64_t seed) -> HvEstimate
{
    auto s = mc_setup(front, ref, samples);
    if (s.chunks == 0) { return {}; }
    std::vector<std::size_t> hits(s.chunks, 0);
    const auto chunks = static_cast<std::int64_t>(s.chunks);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t c = 0; c < chunks; ++c) {
        const auto uc = static_cast<std::size_t>(c);
        hits[uc] = mc_chunk_hits(s.pts, s.lo, ref, chunk_size(uc, s.chunks, samples), derive_seed(seed, uc));
    }
    return mc_finish(std::accumulate(hits.begin(), hits.end(), std::size_t{0}), samples, s.volume);
}

namespace serial {

auto hypervolume_monte_carlo(std::span<const std::vector<double>> front, std::span<const double> ref,
                             std::size_t samples, std::uint64_t seed) -> HvEstimate
{
    auto s = mc_setup(front, ref, samples);
    if (s.chunks == 0) { return {}; }
    std::size_t hits = 0;
    for (std::size_t c = 0; c < s.chunks; ++c) {
        hits += mc_chunk_hits(s.pts, s.lo, ref, chunk_size(c, s.chunks, samples), derive_seed(seed, c));
    }
    return mc_finish(hits, samples, s.volume);
}

} // namespace serial

auto hypervolume_estimate(std::span<const std::vector<double>> front, std::span<const double> ref,
                          std::uint64_t seed) -> HvEstimate
{
    const auto kept = inside_points(front, ref).size();
    if (kept < front.size()) {
        std::cerr << "warning: hypervolume dropped " << front.size() - kept
                  << " point(s) not dominating the reference point\n";
    }
    if (ref.size() == 2) { return {hypervolume_2d(front, ref), 0.0}; }
    if (ref.size() == 3) { return {hypervolume_3d(front, ref), 0.0}; }
    if (ref.size() < 2) { throw Error("hypervolume needs at least 2 objectives"); }
    return hypervolume_monte_carlo(front, ref, 1'000'000, seed);
}

auto hypervolume(std::span<const std::vector<double>> front, std::span<const double> ref) -> double
{
    return hypervolume_estimate(front, ref).value;
}

auto exclusive_contributions(std::span<const std::vector<double>> front, std::span<const double> ref,
                             std::uint64_t seed) -> std::vector<double>
{
    const auto n = front.size();
    std::vector<double> contrib(n, 0.0);
    if (n == 0) { return contrib; }
    const auto m = ref.size();
    if (m <= 3) {
        auto exact = [&](std::span<const std::vector<double>> pts) {
            return m == 2 ? hypervolume_2d(pts, ref) : hypervolume_3d(pts, ref);
        };
        const double total = exact(front);
        Front others;
        for (std::size_t i = 0; i < n; ++i) {
            if (!strictly_inside(front[i], ref)) { continue; }
            others.clear();
            for (std::size_t k = 0; k < n; ++k) {
                if (k != i) { others.push_back(front[k]); }
            }
            contrib[i] = std::max(0.0, total - exact(others));
        }
        return contrib;
    }
    constexpr std::size_t samples = 20000;
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t si = 0; si < sn; ++si) {
        const auto i = static_cast<std::size_t>(si);
        const auto& p = front[i];
        if (!strictly_inside(p, ref)) { continue; }
        Rng rng(derive_seed(seed, i));
        double volume = 1.0;
        for (std::size_t j = 0; j < m; ++j) { volume *= ref[j] - p[j]; }
        std::vector<double> s(m);
        std::size_t alone = 0;
        for (std::size_t k = 0; k < samples; ++k) {
            for (std::size_t j = 0; j < m; ++j) { s[j] = uniform(rng, p[j], ref[j]); }
            bool covered = false;
            for (std::size_t o = 0; o < n && !covered; ++o) {
                covered = o != i && weakly_dominates(front[o], s);
            }
            if (!covered) { ++alone; }
        }
        contrib[i] = volume * static_cast<double>(alone) / static_cast<double>(samples);
    }
    return contrib;
}

auto gd(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference) -> double
{
    if (front.empty() || reference.empty()) { throw Error("gd on an empty set"); }
    double sum = 0.0;
    for (const auto& p : front) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : reference) { best = std::min(best, euclidean(p, r)); }
        sum += best;
    }
    return sum / static_cast<double>(front.size());
}

auto igd(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference) -> double
{
    if (front.empty() || reference.empty()) { throw Error("igd on an empty set"); }
    return gd(reference, front);
}

auto epsilon_additive(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference)
    -> double
{
    if (front.empty() || reference.empty()) { throw Error("epsilon indicator on an empty set"); }
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& r : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& f : front) {
            double shift = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < r.size(); ++j) { shift = std::max(shift, f[j] - r[j]); }
            best = std::min(best, shift);
        }
        worst = std::max(worst, best);
    }
    return worst;
}

auto spacing(std::span<const std::vector<double>> front) -> double
{
    const auto n = front.size();
    if (n <= 1) { return 0.0; }
    std::vector<double> d(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) { continue; }
            double manhattan = 0.0;
            for (std::size_t j = 0; j < front[i].size(); ++j) { manhattan += std::abs(front[i][j] - front[k][j]); }
            d[i] = std::min(d[i], manhattan);
        }
    }
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : d) { ss += (v - mean) * (v - mean); }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

auto coverage(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) -> double
{
    if (b.empty()) { throw Error("coverage of an empty set"); }
    std::size_t covered = 0;
    for (const auto& q : b) {
        if (std::any_of(a.begin(), a.end(), [&](const auto& p) { return dominates(p, q); })) { ++covered; }
    }
    return static_cast<double>(covered) / static_cast<double>(b.size());
}

auto delta_spread(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference)
    -> double
{
    if (reference.empty()) { throw Error("delta spread needs a reference front"); }
    if (front.size() < 2) { return 1.0; }
    Front f(front.begin(), front.end());
    Front r(reference.begin(), reference.end());
    std::sort(f.begin(), f.end());
    std::sort(r.begin(), r.end());
    std::vector<double> gaps;
    for (std::size_t i = 0; i + 1 < f.size(); ++i) { gaps.push_back(euclidean(f[i], f[i + 1])); }
    const double mean = std::accumulate(gaps.begin(), gaps.end(), 0.0) / static_cast<double>(gaps.size());
    const double df = euclidean(r.front(), f.front());
    const double dl = euclidean(r.back(), f.back());
    double dev = 0.0;
    for (double g : gaps) { dev += std::abs(g - mean); }
    const double denom = df + dl + static_cast<double>(gaps.size()) * mean;
    if (!(denom > 0.0)) { return 1.0; }
    return (df + dl + dev) / denom;
}

auto max_spread(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference)
    -> double
{
    if (front.empty() || reference.empty()) { throw Error("max spread on an empty set"); }
    const auto m = reference.front().size();
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        auto extent = [j](std::span<const std::vector<double>> s) {
            auto [lo, hi] = std::minmax_element(s.begin(), s.end(),
                                                [j](const auto& a, const auto& b) { return a[j] < b[j]; });
            return (*hi)[j] - (*lo)[j];
        };
        const double ref_extent = extent(reference);
        const double ratio = ref_extent > 0.0 ? extent(front) / ref_extent : 1.0;
        sum += ratio * ratio;
    }
    return std::clamp(std::sqrt(sum / static_cast<double>(m)), 0.0, 1.0);
}

auto non_dominated(std::span<const std::vector<double>> points) -> Front
{
    Front unique(points.begin(), points.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    Front out;
    for (const auto& p : unique) {
        if (std::none_of(unique.begin(), unique.end(), [&](const auto& q) { return dominates(q, p); })) {
            out.push_back(p);
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const FrontComparison& c)
{
    j = {{"hypervolume", c.hypervolume},
         {"hypervolume_std_error", c.hypervolume_std_error},
         {"gd", c.gd},
         {"igd", c.igd},
         {"eps_additive", c.eps_additive},
         {"spacing", c.spacing},
         {"delta_spread", c.delta_spread},
         {"max_spread", c.max_spread},
         {"coverage", c.coverage},
         {"cardinality", c.cardinality},
         {"sim_count", c.sim_count}};
}

void to_json(nlohmann::json& j, const ComparisonReport& r)
{
    j = {{"a", r.a}, {"b", r.b}, {"reference_size", r.reference_size}, {"analytic_reference", r.analytic_reference}};
}

auto compare_fronts(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b,
                    const ProblemDefinition& problem, std::span<const std::vector<double>> known_front,
                    std::uint64_t sim_count_a, std::uint64_t sim_count_b) -> ComparisonReport
{
    if (a.empty() || b.empty()) { throw Error("cannot compare an empty front"); }
    Front ma;
    Front mb;
    Front mr;
    for (const auto& p : a) { ma.push_back(to_minimization(p, problem)); }
    for (const auto& p : b) { mb.push_back(to_minimization(p, problem)); }
    ComparisonReport report;
    if (!known_front.empty()) {
        for (const auto& p : known_front) { mr.push_back(to_minimization(p, problem)); }
        report.analytic_reference = true;
    } else {
        Front pooled = ma;
        pooled.insert(pooled.end(), mb.begin(), mb.end());
        mr = non_dominated(pooled);
    }

    Front all = ma;
    all.insert(all.end(), mb.begin(), mb.end());
    all.insert(all.end(), mr.begin(), mr.end());
    const auto normalized = normalize_points(all);
    const Front na(normalized.begin(), normalized.begin() + static_cast<std::ptrdiff_t>(ma.size()));
    const Front nb(normalized.begin() + static_cast<std::ptrdiff_t>(ma.size()),
                   normalized.begin() + static_cast<std::ptrdiff_t>(ma.size() + mb.size()));
    const Front nr = non_dominated(
        Front(normalized.begin() + static_cast<std::ptrdiff_t>(ma.size() + mb.size()), normalized.end()));
    report.reference_size = nr.size();

    const std::vector<double> ref(problem.objective_count(), 1.1);
    auto evaluate = [&](const Front& mine, const Front& other, std::uint64_t sims) {
        const auto nd = non_dominated(mine);
        FrontComparison c;
        const auto hv = hypervolume_estimate(nd, ref);
        c.hypervolume = hv.value;
        c.hypervolume_std_error = hv.std_error;
        c.gd = gd(nd, nr);
        c.igd = igd(nd, nr);
        c.eps_additive = epsilon_additive(nd, nr);
        c.spacing = spacing(nd);
        c.delta_spread = delta_spread(nd, nr);
        c.max_spread = max_spread(nd, nr);
        c.coverage = coverage(nd, non_dominated(other));
        c.cardinality = nd.size();
        c.sim_count = sims;
        return c;
    };
    report.a = evaluate(na, nb, sim_count_a);
    report.b = evaluate(nb, na, sim_count_b);
    return report;
}

auto format_comparison_table(const ComparisonReport& r, std::string_view name_a, std::string_view name_b)
    -> std::string
{
    std::ostringstream os;
    const std::array<const char*, 11> head{"Method", "Sim. count", "Hypervol.", "GD", "IGD", "Additive eps",
                                           "Spacing S", "Delta", "MS", "Coverage", "Cardinality"};
    const std::array<int, 11> width{16, 11, 11, 10, 10, 13, 10, 10, 10, 10, 12};
    for (std::size_t i = 0; i < head.size(); ++i) {
        os << std::left << std::setw(width[i]) << head[i];
    }
    os << '\n';
    auto row = [&](std::string_view name, const FrontComparison& c) {
        os << std::left << std::setw(width[0]) << name << std::setw(width[1]) << c.sim_count << std::fixed
           << std::setprecision(6) << std::setw(width[2]) << c.hypervolume << std::setw(width[3]) << c.gd
           << std::setw(width[4]) << c.igd << std::setw(width[5]) << c.eps_additive << std::setw(width[6])
           << c.spacing << std::setw(width[7]) << c.delta_spread << std::setw(width[8]) << c.max_spread
           << std::setw(width[9]) << c.coverage << std::setw(width[10]) << c.cardinality << '\n';
        os.unsetf(std::ios::fixed);
    };
    row(name_a, r.a);
    row(name_b, r.b);
    return os.str();
}

} // namespace cadro
