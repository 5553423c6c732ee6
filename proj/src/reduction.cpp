#include "cadro/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cadro/metrics.hpp"

namespace cadro {

void to_json(nlohmann::json& j, const PruningStrategy& s)
{
    if (s.kind == PruningStrategy::Kind::TopK) {
        j = {{"strategy", "topk"}, {"k", s.k}};
    } else {
        j = {{"strategy", "adaptive"}, {"tau", s.tau}};
    }
}

void from_json(const nlohmann::json& j, PruningStrategy& s)
{
    try {
        check_keys(j, {"strategy", "k", "tau"}, "pruning");
        const auto kind = j.value("strategy", std::string("adaptive"));
        if (kind == "topk") {
            s = PruningStrategy::top_k(j.at("k").get<std::size_t>());
        } else if (kind == "adaptive") {
            s = PruningStrategy::adaptive(j.value("tau", 0.8));
            if (!(s.tau > 0.0 && s.tau <= 1.0)) { throw ConfigError("adaptive tau must be in (0,1]"); }
        } else {
            throw ConfigError("unknown pruning strategy '" + kind + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed pruning strategy: ") + e.what());
    }
}

void ReductionPlan::validate(const ProblemDefinition& problem) const
{
    std::set<std::string> seen;
    for (const auto& a : active) {
        (void)problem.parameter_index(a);
        if (!seen.insert(a).second) { throw ConfigError("parameter '" + a + "' listed twice in the plan"); }
    }
    for (const auto& p : pruned) {
        (void)problem.parameter_index(p);
        if (!seen.insert(p).second) { throw ConfigError("parameter '" + p + "' is both active and pruned"); }
    }
    if (seen.size() != problem.dimension()) { throw ConfigError("plan does not cover every parameter"); }
    if (active.size() < std::min<std::size_t>(2, problem.dimension())) {
        throw ConfigError("plan needs at least 2 active parameters");
    }
    if (anchor.size() != pruned.size()) { throw ConfigError("anchor must cover exactly the pruned set"); }
    for (const auto& p : pruned) {
        auto it = anchor.find(p);
        if (it == anchor.end()) { throw ConfigError("anchor lacks pruned parameter '" + p + "'"); }
        const auto& spec = problem.parameters[problem.parameter_index(p)];
        if (!(it->second >= spec.lower && it->second <= spec.upper)) {
            throw ConfigError("anchor value of '" + p + "' is outside its bounds");
        }
    }
}

void to_json(nlohmann::json& j, const ReductionPlan& p)
{
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& [name, s] : p.scores) { scores.push_back({{"param", name}, {"score", s}}); }
    j = {{"scores", scores},       {"active", p.active},     {"pruned", p.pruned},
         {"anchor", p.anchor},     {"strategy", p.strategy}, {"anchor_eval_index", p.anchor_eval_index}};
}

void from_json(const nlohmann::json& j, ReductionPlan& p)
{
    try {
        p.scores.clear();
        for (const auto& s : j.at("scores")) {
            p.scores.emplace_back(s.at("param").get<std::string>(), s.at("score").get<double>());
        }
        p.active = j.at("active").get<std::vector<std::string>>();
        p.pruned = j.at("pruned").get<std::vector<std::string>>();
        p.anchor = j.at("anchor").get<std::map<std::string, double>>();
        p.strategy = j.at("strategy").get<PruningStrategy>();
        p.anchor_eval_index = j.value("anchor_eval_index", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed reduction plan: ") + e.what());
    }
}

auto importance_scores(const CausalGraph& graph, const ProblemDefinition& problem) -> std::vector<double>
{
    std::vector<double> scores(problem.dimension(), 0.0);
    for (const auto& link : graph.links) {
        scores[problem.parameter_index(link.param)] += std::abs(link.effect * link.confidence);
    }
    return scores;
}

auto partition(std::span<const double> scores, const PruningStrategy& strategy, std::size_t min_active) -> Partition
{
    if (scores.empty()) { throw Error("cannot partition an empty score set"); }
    const auto d = scores.size();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double total = 0.0;
    for (auto i : order) { total += scores[i]; }

    std::size_t keep = d;
    if (total > 0.0) {
        if (strategy.kind == PruningStrategy::Kind::TopK) {
            keep = std::min(strategy.k, d);
        } else if (strategy.tau >= 1.0) {
            keep = static_cast<std::size_t>(
                std::count_if(scores.begin(), scores.end(), [](double s) { return s > 0.0; }));
        } else {
            double cum = 0.0;
            keep = 0;
            while (keep < d && cum < strategy.tau * total) { cum += scores[order[keep++]]; }
        }
        keep = std::max(keep, std::min(min_active, d));
    }

    Partition part;
    part.active.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    part.pruned.assign(order.begin() + static_cast<std::ptrdiff_t>(keep), order.end());
    std::sort(part.active.begin(), part.active.end());
    std::sort(part.pruned.begin(), part.pruned.end());
    return part;
}

auto select_anchor(const ParetoArchive& archive, const ProblemDefinition& problem) -> const EvaluatedDesign&
{
    if (archive.empty()) { throw Error("no non-dominated solutions"); }
    const auto& members = archive.members();
    if (members.size() == 1) { return members.front(); }
    const auto normalized = normalize_objectives(members, problem);
    const std::vector<double> ref(problem.objective_count(), 1.1);
    const auto contrib = exclusive_contributions(normalized, ref);
    std::size_t best = 0;
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (contrib[i] > contrib[best]
            || (contrib[i] == contrib[best] && members[i].eval_index < members[best].eval_index)) {
            best = i;
        }
    }
    return members[best];
}

auto make_plan(const CausalGraph& graph, const ParetoArchive& archive, const ProblemDefinition& problem,
               const PruningStrategy& strategy, std::size_t min_active) -> ReductionPlan
{
    const auto scores = importance_scores(graph, problem);
    const auto part = partition(scores, strategy, min_active);
    const auto& anchor = select_anchor(archive, problem);

    ReductionPlan plan;
    plan.strategy = strategy;
    plan.anchor_eval_index = anchor.eval_index;
    for (std::size_t i = 0; i < scores.size(); ++i) { plan.scores.emplace_back(problem.parameters[i].name, scores[i]); }
    for (auto i : part.active) { plan.active.push_back(problem.parameters[i].name); }
    for (auto i : part.pruned) {
        plan.pruned.push_back(problem.parameters[i].name);
        plan.anchor[problem.parameters[i].name] = anchor.params[i];
    }
    return plan;
}

auto search_space(const ReductionPlan& plan, const ProblemDefinition& problem) -> SearchSpace
{
    plan.validate(problem);
    SearchSpace space;
    // Active coordinates are overwritten by genes; their base value is unused.
    for (const auto& p : problem.parameters) { space.base.push_back(p.lower); }
    for (const auto& name : plan.active) { space.active.push_back(problem.parameter_index(name)); }
    for (const auto& [name, value] : plan.anchor) { space.base[problem.parameter_index(name)] = value; }
    return space;
}

auto reconstruct(std::span<const double> active_genes, const ReductionPlan& plan, const ProblemDefinition& problem)
    -> std::vector<double>
{
    if (active_genes.size() != plan.active.size()) { throw Error("gene vector length does not match the active set"); }
    return search_space(plan, problem).reconstruct(active_genes);
}

auto project(std::span<const double> full, const ReductionPlan& plan, const ProblemDefinition& problem) -> Genes
{
    return search_space(plan, problem).project(full);
}

} // namespace cadro
