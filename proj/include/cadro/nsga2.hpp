#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cadro/problem.hpp"
#include "cadro/rng.hpp"
#include "cadro/session.hpp"

namespace cadro {

using Genes = std::vector<double>;
using Fronts = std::vector<std::vector<std::size_t>>;

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    [[nodiscard]] auto size() const -> std::size_t { return lower.size(); }
};

struct Individual {
    Genes genes;
    std::optional<std::vector<double>> objectives; // minimization form
    std::size_t rank{0};
    double crowding{0.0};
};

struct GAConfig {
    std::size_t population_size{100};
    std::size_t generations{100};
    double crossover_prob{0.9};
    std::optional<double> mutation_prob; // per gene; 1/d when unset
    double sbx_eta{15.0};
    double pm_eta{20.0};
    std::uint64_t seed{0};

    void validate() const;
};

void to_json(nlohmann::json& j, const GAConfig& c);
void from_json(const nlohmann::json& j, GAConfig& c);

/// Fronts of index lists; front 0 is the non-dominated set. O(m n^2).
/// The pairwise domination pass runs in parallel.
auto fast_non_dominated_sort(std::span<const std::vector<double>> points) -> Fronts;

/// Crowding distance of each point in a single front. Boundary points get +inf.
auto crowding_distance(std::span<const std::vector<double>> front) -> std::vector<double>;

/// Simulated binary crossover with per-gene exchange probability 1/2.
/// When the crossover draw fails both children are exact parent copies.
auto sbx_crossover(std::span<const double> p1, std::span<const double> p2, const Bounds& bounds, double eta,
                   double crossover_prob, Rng& rng) -> std::pair<Genes, Genes>;

/// Bounded polynomial mutation; every gene mutates with probability `prob`.
auto polynomial_mutation(std::span<const double> genes, const Bounds& bounds, double eta, double prob, Rng& rng)
    -> Genes;

/// Non-dominated set of evaluated designs, deduplicated on exact params.
class ParetoArchive {
public:
    ParetoArchive() = default;
    explicit ParetoArchive(const ProblemDefinition& problem);

    /// Inserts the design unless it is dominated or its params are already
    /// present; evicts members it dominates. Returns true when inserted.
    auto insert(const EvaluatedDesign& design) -> bool;

    [[nodiscard]] auto members() const -> const std::vector<EvaluatedDesign>& { return members_; }
    /// Minimization-form objectives aligned with members().
    [[nodiscard]] auto points() const -> const std::vector<std::vector<double>>& { return points_; }
    [[nodiscard]] auto size() const -> std::size_t { return members_.size(); }
    [[nodiscard]] auto empty() const -> bool { return members_.empty(); }

private:
    std::vector<Direction> directions_;
    std::vector<EvaluatedDesign> members_;
    std::vector<std::vector<double>> points_;
};

/// Normalization frame for tracking hypervolume over a run. Objectives are
/// mapped (minimization form) so that `ideal` goes to 0 and `nadir` to 1.
struct HvFrame {
    std::vector<double> ideal;
    std::vector<double> nadir;
    double reference{1.0};

    [[nodiscard]] auto normalize(std::span<const double> min_form) const -> std::vector<double>;
    /// Hypervolume of the archive in this frame; points beyond the reference are ignored.
    [[nodiscard]] auto hypervolume(const ParetoArchive& archive) const -> double;
};

/// Frame from a known front in problem units (reference 1.0).
auto frame_from_front(std::span<const std::vector<double>> front, const ProblemDefinition& problem) -> HvFrame;
/// Frame from the observed min-max of minimization-form points (reference 1.1).
auto frame_from_points(std::span<const std::vector<double>> min_form) -> HvFrame;

/// Ordered subset of parameters under search. Coordinates outside `active`
/// are taken from `base` when a gene vector is expanded.
struct SearchSpace {
    std::vector<std::size_t> active;
    std::vector<double> base;

    static auto full(const ProblemDefinition& problem) -> SearchSpace;

    [[nodiscard]] auto bounds(const ProblemDefinition& problem) const -> Bounds;
    [[nodiscard]] auto reconstruct(std::span<const double> genes) const -> std::vector<double>;
    [[nodiscard]] auto project(std::span<const double> full) const -> Genes;
};

struct GenerationRecord {
    std::size_t generation{0};
    std::uint64_t evaluations{0}; // global counter after the generation
    std::size_t archive_size{0};
    double hypervolume{0.0};
};

void to_json(nlohmann::json& j, const GenerationRecord& r);

struct Nsga2Options {
    Tag tag{Tag::Exploration};
    /// Stop once this many simulations were spent by the run.
    std::optional<std::uint64_t> max_evaluations;
    /// Starting genes; padded with uniform random individuals, truncated to the population size.
    std::vector<Genes> initial;
    std::optional<HvFrame> frame; // frozen from the initial population when unset
    std::ostream* progress{nullptr};
    std::string phase_label{"nsga2"};
};

struct Nsga2Result {
    std::vector<Individual> population;
    ParetoArchive archive;
    Dataset evaluations;
    std::vector<GenerationRecord> history;
};

/// Elitist NSGA-II over the active coordinates of `space`.
auto run_nsga2(const SearchSpace& space, const GAConfig& config, EvaluationSession& session,
               const Nsga2Options& options = {}) -> Nsga2Result;

namespace serial {

/// Single-threaded reference for fast_non_dominated_sort.
auto fast_non_dominated_sort(std::span<const std::vector<double>> points) -> Fronts;

} // namespace serial

} // namespace cadro
