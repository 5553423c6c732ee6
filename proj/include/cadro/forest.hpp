#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cadro/problem.hpp"

namespace cadro {

struct ForestConfig {
    std::size_t trees{100};
    std::size_t max_depth{8};
    std::size_t min_leaf{5};
    std::size_t features_per_split{0}; // 0 -> ceil(sqrt(d))
    std::uint64_t seed{0};
};

void to_json(nlohmann::json& j, const ForestConfig& c);
void from_json(const nlohmann::json& j, ForestConfig& c);

/// Column-major feature table: `columns[f][row]`.
using FeatureColumns = std::vector<std::vector<double>>;

/// Regression tree grown on a bootstrap sample with variance-reduction splits.
class RegressionTree {
public:
    struct Node {
        std::size_t feature{0};
        double threshold{0.0};
        double value{0.0};
        std::int32_t left{-1}; // -1 marks a leaf
        std::int32_t right{-1};
    };

    /// Grows the tree on `sample` (row indices, repeats allowed) and adds the
    /// weighted impurity decrease of each split to `importance[feature]`.
    RegressionTree(const FeatureColumns& x, std::span<const double> y, std::vector<std::size_t> sample,
                   const ForestConfig& config, std::uint64_t seed, std::span<double> importance);

    [[nodiscard]] auto predict(std::span<const double> row) const -> double;
    [[nodiscard]] auto nodes() const -> const std::vector<Node>& { return nodes_; }

private:
    std::vector<Node> nodes_;
};

/// Impurity-based importances of a bagged forest, normalized to sum 1.
/// Trees are grown in parallel; each tree draws from its own seeded stream and
/// importances are summed in tree order, so the result is thread-count free.
auto forest_importance(const FeatureColumns& x, std::span<const double> y, const ForestConfig& config)
    -> std::vector<double>;

/// Random-forest importance of every parameter for one objective.
/// Requires at least 50 rows. All-zero importances become uniform 1/d.
auto rf_importance(const Dataset& data, std::size_t objective, const ForestConfig& config) -> std::vector<double>;

namespace serial {

auto forest_importance(const FeatureColumns& x, std::span<const double> y, const ForestConfig& config)
    -> std::vector<double>;

} // namespace serial

} // namespace cadro
