#pragma once

#include <map>
#include <string>
#include <vector>

#include "cadro/causal.hpp"
#include "cadro/nsga2.hpp"
#include "cadro/problem.hpp"

namespace cadro {

struct PruningStrategy {
    enum class Kind { TopK, Adaptive };
    Kind kind{Kind::Adaptive};
    std::size_t k{0};
    double tau{0.8};

    static auto top_k(std::size_t k) -> PruningStrategy { return {Kind::TopK, k, 0.0}; }
    static auto adaptive(double tau = 0.8) -> PruningStrategy { return {Kind::Adaptive, 0, tau}; }
};

void to_json(nlohmann::json& j, const PruningStrategy& s);
void from_json(const nlohmann::json& j, PruningStrategy& s);

struct ReductionPlan {
    std::vector<std::pair<std::string, double>> scores; // declaration order
    std::vector<std::string> active;                    // gene order = declaration order
    std::vector<std::string> pruned;
    std::map<std::string, double> anchor;               // value per pruned parameter
    PruningStrategy strategy;
    std::uint64_t anchor_eval_index{0};

    /// Checks coverage, disjointness and anchor bounds against the problem.
    void validate(const ProblemDefinition& problem) const;
};

void to_json(nlohmann::json& j, const ReductionPlan& p);
void from_json(const nlohmann::json& j, ReductionPlan& p);

/// S(P_i) = sum_j |E(P_i, O_j) * C(P_i, O_j)| in parameter declaration order.
auto importance_scores(const CausalGraph& graph, const ProblemDefinition& problem) -> std::vector<double>;

struct Partition {
    std::vector<std::size_t> active; // ascending parameter indices
    std::vector<std::size_t> pruned;
};

/// TopK or cumulative-share cutoff, clamped to at least `min_active` kept.
/// Ties in score go to the earlier-declared parameter. All-zero scores keep
/// every parameter.
auto partition(std::span<const double> scores, const PruningStrategy& strategy, std::size_t min_active = 2)
    -> Partition;

/// Archive member with the largest exclusive hypervolume contribution in
/// normalized objective space (reference 1.1); lowest eval_index wins ties.
auto select_anchor(const ParetoArchive& archive, const ProblemDefinition& problem) -> const EvaluatedDesign&;

auto make_plan(const CausalGraph& graph, const ParetoArchive& archive, const ProblemDefinition& problem,
               const PruningStrategy& strategy, std::size_t min_active = 2) -> ReductionPlan;

/// Search space whose genes are the plan's active parameters and whose other
/// coordinates are pinned at the anchor.
auto search_space(const ReductionPlan& plan, const ProblemDefinition& problem) -> SearchSpace;

auto reconstruct(std::span<const double> active_genes, const ReductionPlan& plan, const ProblemDefinition& problem)
    -> std::vector<double>;
auto project(std::span<const double> full, const ReductionPlan& plan, const ProblemDefinition& problem) -> Genes;

} // namespace cadro
