#include "cadro/nsga2.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "cadro/metrics.hpp"

namespace cadro {

void GAConfig::validate() const
{
    if (population_size < 4 || population_size % 2 != 0) {
        throw ConfigError("population_size must be even and at least 4");
    }
    if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) { throw ConfigError("crossover_prob must be in [0,1]"); }
    if (mutation_prob && !(*mutation_prob >= 0.0 && *mutation_prob <= 1.0)) {
        throw ConfigError("mutation_prob must be in [0,1]");
    }
    if (!(sbx_eta > 0.0) || !(pm_eta > 0.0)) { throw ConfigError("sbx_eta and pm_eta must be positive"); }
}

void to_json(nlohmann::json& j, const GAConfig& c)
{
    j = {{"population_size", c.population_size}, {"generations", c.generations},
         {"crossover_prob", c.crossover_prob},   {"sbx_eta", c.sbx_eta},
         {"pm_eta", c.pm_eta},                   {"seed", c.seed}};
    j["mutation_prob"] = c.mutation_prob ? nlohmann::json(*c.mutation_prob) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, GAConfig& c)
{
    check_keys(j, {"population_size", "generations", "crossover_prob", "mutation_prob", "sbx_eta", "pm_eta", "seed"},
               "GA config");
    try {
        c.population_size = j.value("population_size", c.population_size);
        c.generations = j.value("generations", c.generations);
        c.crossover_prob = j.value("crossover_prob", c.crossover_prob);
        if (j.contains("mutation_prob") && !j["mutation_prob"].is_null()) {
            c.mutation_prob = j["mutation_prob"].get<double>();
        }
        c.sbx_eta = j.value("sbx_eta", c.sbx_eta);
        c.pm_eta = j.value("pm_eta", c.pm_eta);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed GA config: ") + e.what());
    }
    c.validate();
}

// --- sorting -------------------------------------------------------------

namespace {

void check_points(std::span<const std::vector<double>> points)
{
    for (const auto& p : points) {
        if (p.size() != points.front().size()) { throw Error("objective vector length mismatch"); }
    }
}

auto peel_fronts(std::vector<std::vector<std::size_t>>& dominated, std::vector<std::size_t>& count) -> Fronts
{
    Fronts fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < count.size(); ++i) {
        if (count[i] == 0) { current.push_back(i); }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current) {
            for (auto j : dominated[i]) {
                if (--count[j] == 0) { next.push_back(j); }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

} // namespace

auto fast_non_dominated_sort(std::span<const std::vector<double>> points) -> Fronts
{
    if (points.empty()) { return {}; }
    check_points(points);
    const auto n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    const auto sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (n > 64)
    for (std::int64_t si = 0; si < sn; ++si) {
        const auto i = static_cast<std::size_t>(si);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) { continue; }
            if (dominates(points[i], points[j])) {
                dominated[i].push_back(j);
            } else if (dominates(points[j], points[i])) {
                ++count[i];
            }
        }
    }
    return peel_fronts(dominated, count);
}

namespace serial {

auto fast_non_dominated_sort(std::span<const std::vector<double>> points) -> Fronts
{
    if (points.empty()) { return {}; }
    check_points(points);
    const auto n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> count(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(points[i], points[j])) {
                dominated[i].push_back(j);
                ++count[j];
            } else if (dominates(points[j], points[i])) {
                dominated[j].push_back(i);
                ++count[i];
            }
        }
    }
    for (auto& d : dominated) { std::sort(d.begin(), d.end()); }
    return peel_fronts(dominated, count);
}

} // namespace serial

auto crowding_distance(std::span<const std::vector<double>> front) -> std::vector<double>
{
    const auto n = front.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (n <= 2) { return std::vector<double>(n, inf); }
    const auto m = front.front().size();
    std::vector<double> dist(n, 0.0);
    std::vector<std::size_t> order(n);
    for (std::size_t k = 0; k < m; ++k) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        const double range = front[order.back()][k] - front[order.front()][k];
        if (!(range > 0.0) || !std::isfinite(range)) { continue; }
        for (std::size_t r = 1; r + 1 < n; ++r) {
            dist[order[r]] += (front[order[r + 1]][k] - front[order[r - 1]][k]) / range;
        }
    }
    return dist;
}

// --- variation -----------------------------------------------------------

auto sbx_crossover(std::span<const double> p1, std::span<const double> p2, const Bounds& bounds, double eta,
                   double crossover_prob, Rng& rng) -> std::pair<Genes, Genes>
{
    Genes c1(p1.begin(), p1.end());
    Genes c2(p2.begin(), p2.end());
    if (!(uniform01(rng) < crossover_prob)) { return {c1, c2}; }
    for (std::size_t i = 0; i < c1.size(); ++i) {
        if (uniform01(rng) >= 0.5 || p1[i] == p2[i]) { continue; }
        const double u = uniform01(rng);
        const double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
                                     : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
        const double a = p1[i];
        const double b = p2[i];
        c1[i] = std::clamp(0.5 * ((1.0 + beta) * a + (1.0 - beta) * b), bounds.lower[i], bounds.upper[i]);
        c2[i] = std::clamp(0.5 * ((1.0 - beta) * a + (1.0 + beta) * b), bounds.lower[i], bounds.upper[i]);
    }
    return {c1, c2};
}

auto polynomial_mutation(std::span<const double> genes, const Bounds& bounds, double eta, double prob, Rng& rng)
    -> Genes
{
    Genes out(genes.begin(), genes.end());
    const double power = 1.0 / (eta + 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(uniform01(rng) < prob)) { continue; }
        const double lo = bounds.lower[i];
        const double hi = bounds.upper[i];
        const double y = out[i];
        const double delta1 = (y - lo) / (hi - lo);
        const double delta2 = (hi - y) / (hi - lo);
        const double r = uniform01(rng);
        double deltaq = 0.0;
        if (r < 0.5) {
            const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - delta1, eta + 1.0);
            deltaq = std::pow(val, power) - 1.0;
        } else {
            const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - delta2, eta + 1.0);
            deltaq = 1.0 - std::pow(val, power);
        }
        out[i] = std::clamp(y + deltaq * (hi - lo), lo, hi);
    }
    return out;
}

// --- archive -------------------------------------------------------------

ParetoArchive::ParetoArchive(const ProblemDefinition& problem)
{
    for (const auto& o : problem.objectives) { directions_.push_back(o.direction); }
}

auto ParetoArchive::insert(const EvaluatedDesign& design) -> bool
{
    if (design.objectives.size() != directions_.size()) { throw Error("archive insert with wrong objective count"); }
    std::vector<double> p(design.objectives);
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (directions_[j] == Direction::Maximize) { p[j] = -p[j]; }
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i].params == design.params || dominates(points_[i], p)) { return false; }
    }
    std::size_t keep = 0;
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (dominates(p, points_[i])) { continue; }
        if (keep != i) {
            members_[keep] = std::move(members_[i]);
            points_[keep] = std::move(points_[i]);
        }
        ++keep;
    }
    members_.resize(keep);
    points_.resize(keep);
    members_.push_back(design);
    points_.push_back(std::move(p));
    return true;
}

// --- hypervolume frames --------------------------------------------------

auto HvFrame::normalize(std::span<const double> min_form) const -> std::vector<double>
{
    std::vector<double> q(min_form.size());
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double span = nadir[j] - ideal[j];
        q[j] = span > 0.0 ? (min_form[j] - ideal[j]) / span : 0.0;
    }
    return q;
}

auto HvFrame::hypervolume(const ParetoArchive& archive) const -> double
{
    std::vector<std::vector<double>> pts;
    for (const auto& p : archive.points()) {
        auto q = normalize(p);
        if (std::all_of(q.begin(), q.end(), [&](double v) { return v < reference; })) { pts.push_back(std::move(q)); }
    }
    if (pts.empty()) { return 0.0; }
    const std::vector<double> ref(ideal.size(), reference);
    if (ref.size() <= 3) { return cadro::hypervolume(pts, ref); }
    return hypervolume_monte_carlo(pts, ref, 100000, 0x5eedULL).value;
}

auto frame_from_front(std::span<const std::vector<double>> front, const ProblemDefinition& problem) -> HvFrame
{
    if (front.empty()) { throw Error("empty reference front"); }
    std::vector<std::vector<double>> pts;
    for (const auto& f : front) { pts.push_back(to_minimization(f, problem)); }
    auto frame = frame_from_points(pts);
    frame.reference = 1.0;
    return frame;
}

auto frame_from_points(std::span<const std::vector<double>> min_form) -> HvFrame
{
    if (min_form.empty()) { throw Error("empty set"); }
    const auto m = min_form.front().size();
    HvFrame f{std::vector<double>(m, std::numeric_limits<double>::infinity()),
              std::vector<double>(m, -std::numeric_limits<double>::infinity()), 1.1};
    for (const auto& p : min_form) {
        for (std::size_t j = 0; j < m; ++j) {
            f.ideal[j] = std::min(f.ideal[j], p[j]);
            f.nadir[j] = std::max(f.nadir[j], p[j]);
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (!(f.nadir[j] > f.ideal[j])) { f.nadir[j] = f.ideal[j] + 1.0; }
    }
    return f;
}

// --- search space --------------------------------------------------------

auto SearchSpace::full(const ProblemDefinition& problem) -> SearchSpace
{
    SearchSpace s;
    s.active.resize(problem.dimension());
    std::iota(s.active.begin(), s.active.end(), std::size_t{0});
    for (const auto& p : problem.parameters) { s.base.push_back(p.lower); }
    return s;
}

auto SearchSpace::bounds(const ProblemDefinition& problem) const -> Bounds
{
    Bounds b;
    for (auto i : active) {
        b.lower.push_back(problem.parameters.at(i).lower);
        b.upper.push_back(problem.parameters.at(i).upper);
    }
    return b;
}

auto SearchSpace::reconstruct(std::span<const double> genes) const -> std::vector<double>
{
    if (genes.size() != active.size()) { throw Error("gene vector length does not match the active set"); }
    std::vector<double> full = base;
    for (std::size_t i = 0; i < active.size(); ++i) { full.at(active[i]) = genes[i]; }
    return full;
}

auto SearchSpace::project(std::span<const double> full) const -> Genes
{
    if (full.size() != base.size()) { throw Error("parameter vector length mismatch"); }
    Genes g;
    g.reserve(active.size());
    for (auto i : active) { g.push_back(full[i]); }
    return g;
}

void to_json(nlohmann::json& j, const GenerationRecord& r)
{
    j = {{"generation", r.generation}, {"evaluations", r.evaluations},
         {"archive_size", r.archive_size}, {"hypervolume", r.hypervolume}};
}

// --- engine --------------------------------------------------------------

namespace {

auto better(const Individual& a, const Individual& b) -> bool
{
    if (a.rank != b.rank) { return a.rank < b.rank; }
    return a.crowding > b.crowding;
}

auto row_by_index(const Dataset& data, std::uint64_t eval_index) -> const EvaluatedDesign&
{
    const auto& rows = data.rows();
    auto it = std::lower_bound(rows.begin(), rows.end(), eval_index,
                               [](const EvaluatedDesign& r, std::uint64_t v) { return r.eval_index < v; });
    if (it == rows.end() || it->eval_index != eval_index) { throw Error("evaluation missing from dataset"); }
    return *it;
}

/// Ranks and crowding for a population; returns the fronts.
auto assign_fitness(std::vector<Individual>& pop) -> Fronts
{
    std::vector<std::vector<double>> pts;
    pts.reserve(pop.size());
    for (const auto& ind : pop) { pts.push_back(*ind.objectives); }
    auto fronts = fast_non_dominated_sort(pts);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
        std::vector<std::vector<double>> fp;
        for (auto i : fronts[r]) { fp.push_back(pts[i]); }
        auto cd = crowding_distance(fp);
        for (std::size_t k = 0; k < fronts[r].size(); ++k) {
            pop[fronts[r][k]].rank = r;
            pop[fronts[r][k]].crowding = cd[k];
        }
    }
    return fronts;
}

} // namespace

auto run_nsga2(const SearchSpace& space, const GAConfig& config, EvaluationSession& session,
               const Nsga2Options& options) -> Nsga2Result
{
    config.validate();
    const auto& problem = session.problem();
    if (space.active.empty()) { throw ConfigError("search space has no active parameters"); }
    if (space.base.size() != problem.dimension()) { throw ConfigError("search space does not match the problem"); }
    const auto bounds = space.bounds(problem);
    const auto d = bounds.size();
    const auto n = config.population_size;
    const double pm = config.mutation_prob.value_or(1.0 / static_cast<double>(d));
    if (options.max_evaluations && *options.max_evaluations < n) {
        throw ConfigError("evaluation budget is smaller than the population size");
    }

    const std::string& label = options.phase_label;
    Rng rng_init = substream(config.seed, label + "/init");
    Rng rng_cx = substream(config.seed, label + "/crossover");
    Rng rng_mut = substream(config.seed, label + "/mutation");
    Rng rng_tour = substream(config.seed, label + "/tournament");

    const auto start = session.evaluations();
    const auto first_row = session.dataset().size();
    Nsga2Result result;
    result.archive = ParetoArchive(problem);
    const auto m = problem.objective_count();

    auto evaluate = [&](std::vector<Individual>& inds) {
        std::vector<std::vector<double>> full;
        full.reserve(inds.size());
        for (const auto& ind : inds) { full.push_back(space.reconstruct(ind.genes)); }
        auto outcomes = session.evaluate(full, options.tag);
        for (std::size_t i = 0; i < inds.size(); ++i) {
            if (outcomes[i].ok) {
                inds[i].objectives = to_minimization(outcomes[i].objectives, problem);
                result.archive.insert(row_by_index(session.dataset(), outcomes[i].eval_index));
            } else {
                inds[i].objectives = std::vector<double>(m, std::numeric_limits<double>::infinity());
            }
        }
    };

    std::vector<Individual> pop;
    for (const auto& g : options.initial) {
        if (pop.size() == n) { break; }
        if (g.size() != d) { throw Error("initial individual has wrong gene count"); }
        Individual ind;
        ind.genes = g;
        for (std::size_t i = 0; i < d; ++i) { ind.genes[i] = std::clamp(ind.genes[i], bounds.lower[i], bounds.upper[i]); }
        pop.push_back(std::move(ind));
    }
    while (pop.size() < n) {
        Individual ind;
        ind.genes.resize(d);
        for (std::size_t i = 0; i < d; ++i) { ind.genes[i] = uniform(rng_init, bounds.lower[i], bounds.upper[i]); }
        pop.push_back(std::move(ind));
    }
    evaluate(pop);
    assign_fitness(pop);

    HvFrame frame;
    if (options.frame) {
        frame = *options.frame;
    } else {
        std::vector<std::vector<double>> finite;
        for (const auto& ind : pop) {
            if (std::isfinite((*ind.objectives)[0])) { finite.push_back(*ind.objectives); }
        }
        frame = finite.empty() ? HvFrame{std::vector<double>(m, 0.0), std::vector<double>(m, 1.0), 1.1}
                               : frame_from_points(finite);
    }

    auto record = [&](std::size_t gen) {
        GenerationRecord rec{gen, session.evaluations(), result.archive.size(), frame.hypervolume(result.archive)};
        result.history.push_back(rec);
        if (options.progress != nullptr) {
            nlohmann::json j = rec;
            j["phase"] = label;
            *options.progress << j.dump() << '\n';
        }
    };
    record(0);

    auto tournament = [&]() -> const Individual& {
        const auto& a = pop[uniform_index(rng_tour, pop.size())];
        const auto& b = pop[uniform_index(rng_tour, pop.size())];
        return better(b, a) ? b : a;
    };

    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::size_t quota = n;
        if (options.max_evaluations) {
            const auto used = session.evaluations() - start;
            if (used >= *options.max_evaluations) { break; }
            quota = static_cast<std::size_t>(std::min<std::uint64_t>(n, *options.max_evaluations - used));
        }
        std::vector<Individual> offspring;
        offspring.reserve(n);
        while (offspring.size() < n) {
            const auto& a = tournament();
            const auto& b = tournament();
            auto [c1, c2] = sbx_crossover(a.genes, b.genes, bounds, config.sbx_eta, config.crossover_prob, rng_cx);
            offspring.push_back({polynomial_mutation(c1, bounds, config.pm_eta, pm, rng_mut), {}, 0, 0.0});
            offspring.push_back({polynomial_mutation(c2, bounds, config.pm_eta, pm, rng_mut), {}, 0, 0.0});
        }
        offspring.resize(quota);
        evaluate(offspring);

        std::vector<Individual> merged = std::move(pop);
        merged.insert(merged.end(), std::make_move_iterator(offspring.begin()),
                      std::make_move_iterator(offspring.end()));
        auto fronts = assign_fitness(merged);
        pop.clear();
        for (const auto& front : fronts) {
            if (pop.size() + front.size() <= n) {
                for (auto i : front) { pop.push_back(merged[i]); }
                continue;
            }
            auto last = front;
            std::stable_sort(last.begin(), last.end(),
                             [&](std::size_t a, std::size_t b) { return merged[a].crowding > merged[b].crowding; });
            for (std::size_t k = 0; pop.size() < n; ++k) { pop.push_back(merged[last[k]]); }
            break;
        }
        record(gen);
    }

    result.population = std::move(pop);
    result.evaluations = Dataset(problem);
    const auto& rows = session.dataset().rows();
    for (auto i = first_row; i < rows.size(); ++i) { result.evaluations.append(rows[i]); }
    return result;
}

} // namespace cadro
