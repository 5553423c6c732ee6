#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cadro/problem.hpp"

namespace cadro {

using Front = std::vector<std::vector<double>>;

// All functions below take minimization-form points.

struct HvEstimate {
    double value{0.0};
    double std_error{0.0}; // 0 for exact computations
};

/// Exact area dominated by a 2D front (sweep over the first objective).
auto hypervolume_2d(std::span<const std::vector<double>> front, std::span<const double> ref) -> double;

/// Exact volume dominated by a 3D front (slicing along the third objective).
auto hypervolume_3d(std::span<const std::vector<double>> front, std::span<const double> ref) -> double;

/// Monte-Carlo estimate over the box [ideal, ref]. Samples are drawn in fixed
/// chunks with per-chunk seeds, so the result does not depend on thread count.
auto hypervolume_monte_carlo(std::span<const std::vector<double>> front, std::span<const double> ref,
                             std::size_t samples, std::uint64_t seed) -> HvEstimate;

/// Exact for 2 and 3 objectives, Monte Carlo with 10^6 samples beyond.
/// Points that do not strictly dominate `ref` are dropped with a warning.
auto hypervolume_estimate(std::span<const std::vector<double>> front, std::span<const double> ref,
                          std::uint64_t seed = 0x4856ULL) -> HvEstimate;

auto hypervolume(std::span<const std::vector<double>> front, std::span<const double> ref) -> double;

/// Volume dominated exclusively by each point (exact for m <= 3).
auto exclusive_contributions(std::span<const std::vector<double>> front, std::span<const double> ref,
                             std::uint64_t seed = 0x4856ULL) -> std::vector<double>;

auto gd(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference) -> double;
auto igd(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference) -> double;
auto epsilon_additive(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference)
    -> double;
/// Schott's spacing with Manhattan nearest-neighbour distances.
auto spacing(std::span<const std::vector<double>> front) -> double;
/// Fraction of `b` strictly dominated by some member of `a`.
auto coverage(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b) -> double;
/// Deb's spread along the front sorted by the first objective.
auto delta_spread(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference)
    -> double;
auto max_spread(std::span<const std::vector<double>> front, std::span<const std::vector<double>> reference)
    -> double;

/// Non-dominated subset (first front) of a point set, duplicates collapsed.
auto non_dominated(std::span<const std::vector<double>> points) -> Front;

struct FrontComparison {
    double hypervolume{0.0};
    double hypervolume_std_error{0.0};
    double gd{0.0};
    double igd{0.0};
    double eps_additive{0.0};
    double spacing{0.0};
    double delta_spread{0.0};
    double max_spread{0.0};
    double coverage{0.0}; // fraction of the other front this one dominates
    std::size_t cardinality{0};
    std::uint64_t sim_count{0};
};

void to_json(nlohmann::json& j, const FrontComparison& c);

struct ComparisonReport {
    FrontComparison a;
    FrontComparison b;
    std::size_t reference_size{0};
    bool analytic_reference{false};
};

void to_json(nlohmann::json& j, const ComparisonReport& r);

/// Compares two fronts given in problem units.
///
/// Objectives are converted to minimization form and min-max normalized over
/// the union of both fronts and the reference. The reference front is
/// `known_front` when given, else the non-dominated union of both fronts.
/// Hypervolume uses the reference point (1.1, ..., 1.1).
auto compare_fronts(std::span<const std::vector<double>> a, std::span<const std::vector<double>> b,
                    const ProblemDefinition& problem, std::span<const std::vector<double>> known_front = {},
                    std::uint64_t sim_count_a = 0, std::uint64_t sim_count_b = 0) -> ComparisonReport;

/// Aligned text table with one row per front.
auto format_comparison_table(const ComparisonReport& r, std::string_view name_a, std::string_view name_b)
    -> std::string;

namespace serial {

/// Single-threaded reference for hypervolume_monte_carlo (identical chunking).
auto hypervolume_monte_carlo(std::span<const std::vector<double>> front, std::span<const double> ref,
                             std::size_t samples, std::uint64_t seed) -> HvEstimate;

} // namespace serial

} // namespace cadro
