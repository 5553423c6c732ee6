#include "cadro/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cadro/rng.hpp"

namespace cadro {

void to_json(nlohmann::json& j, const ForestConfig& c)
{
    j = {{"trees", c.trees}, {"max_depth", c.max_depth}, {"min_leaf", c.min_leaf},
         {"features_per_split", c.features_per_split}};
}

void from_json(const nlohmann::json& j, ForestConfig& c)
{
    check_keys(j, {"trees", "max_depth", "min_leaf", "features_per_split"}, "forest config");
    try {
        c.trees = j.value("trees", c.trees);
        c.max_depth = j.value("max_depth", c.max_depth);
        c.min_leaf = j.value("min_leaf", c.min_leaf);
        c.features_per_split = j.value("features_per_split", c.features_per_split);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed forest config: ") + e.what());
    }
    if (c.trees == 0 || c.min_leaf == 0) { throw ConfigError("forest needs trees >= 1 and min_leaf >= 1"); }
}

namespace {

struct Builder {
    const FeatureColumns& x;
    std::span<const double> y;
    const ForestConfig& config;
    std::size_t mtry;
    Rng rng;
    std::span<double> importance;
    std::vector<RegressionTree::Node>& nodes;
    std::vector<std::size_t> sample;
    std::vector<std::size_t> features;
    std::vector<std::pair<double, double>> scratch;

    auto grow(std::size_t begin, std::size_t end, std::size_t depth) -> std::int32_t
    {
        const auto n = end - begin;
        double sum = 0.0;
        double sumsq = 0.0;
        for (auto i = begin; i < end; ++i) {
            const double v = y[sample[i]];
            sum += v;
            sumsq += v * v;
        }
        const auto id = static_cast<std::int32_t>(nodes.size());
        nodes.push_back({0, 0.0, sum / static_cast<double>(n), -1, -1});
        const double sse = std::max(0.0, sumsq - sum * sum / static_cast<double>(n));
        if (depth >= config.max_depth || n < 2 * config.min_leaf || !(sse > 0.0)) { return id; }

        // Partial Fisher-Yates: the first mtry entries become this node's candidates.
        for (std::size_t k = 0; k < mtry; ++k) {
            const auto pick = k + uniform_index(rng, features.size() - k);
            std::swap(features[k], features[pick]);
        }

        double best_gain = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        for (std::size_t k = 0; k < mtry; ++k) {
            const auto f = features[k];
            scratch.clear();
            for (auto i = begin; i < end; ++i) { scratch.emplace_back(x[f][sample[i]], y[sample[i]]); }
            std::sort(scratch.begin(), scratch.end());
            double lsum = 0.0;
            double lsq = 0.0;
            for (std::size_t i = 1; i < n; ++i) {
                lsum += scratch[i - 1].second;
                lsq += scratch[i - 1].second * scratch[i - 1].second;
                if (i < config.min_leaf || n - i < config.min_leaf) { continue; }
                if (!(scratch[i - 1].first < scratch[i].first)) { continue; }
                const double nl = static_cast<double>(i);
                const double nr = static_cast<double>(n - i);
                const double rsum = sum - lsum;
                const double rsq = sumsq - lsq;
                const double child = (lsq - lsum * lsum / nl) + (rsq - rsum * rsum / nr);
                const double gain = sse - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    const double lo = scratch[i - 1].first;
                    const double hi = scratch[i].first;
                    double mid = lo + (hi - lo) / 2.0;
                    if (!(mid < hi)) { mid = lo; }
                    best_threshold = mid;
                }
            }
        }
        if (!(best_gain > 0.0)) { return id; }

        importance[best_feature] += best_gain;
        const auto mid = std::partition(sample.begin() + static_cast<std::ptrdiff_t>(begin),
                                        sample.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::size_t r) { return x[best_feature][r] <= best_threshold; });
        const auto split = static_cast<std::size_t>(mid - sample.begin());
        nodes[static_cast<std::size_t>(id)].feature = best_feature;
        nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
        const auto left = grow(begin, split, depth + 1);
        const auto right = grow(split, end, depth + 1);
        nodes[static_cast<std::size_t>(id)].left = left;
        nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }
};

auto features_per_split(const ForestConfig& config, std::size_t d) -> std::size_t
{
    if (config.features_per_split > 0) { return std::min(config.features_per_split, d); }
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
}

void check_table(const FeatureColumns& x, std::span<const double> y)
{
    if (x.empty()) { throw Error("forest needs at least one feature"); }
    for (const auto& col : x) {
        if (col.size() != y.size()) { throw Error("feature column length differs from the target"); }
    }
    if (y.empty()) { throw Error("forest needs at least one row"); }
}

auto tree_importance(const FeatureColumns& x, std::span<const double> y, const ForestConfig& config,
                     std::size_t t) -> std::vector<double>
{
    const auto n = y.size();
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) { s = uniform_index(rng, n); }
    std::vector<double> imp(x.size(), 0.0);
    RegressionTree tree(x, y, std::move(sample), config, rng(), imp);
    return imp;
}

auto normalize_importance(std::vector<double> total) -> std::vector<double>
{
    const double sum = std::accumulate(total.begin(), total.end(), 0.0);
    if (!(sum > 0.0)) {
        std::fill(total.begin(), total.end(), 1.0 / static_cast<double>(total.size()));
        return total;
    }
    for (double& v : total) { v /= sum; }
    return total;
}

} // namespace

RegressionTree::RegressionTree(const FeatureColumns& x, std::span<const double> y, std::vector<std::size_t> sample,
                               const ForestConfig& config, std::uint64_t seed, std::span<double> importance)
{
    if (sample.empty()) { throw Error("regression tree needs a non-empty sample"); }
    std::vector<std::size_t> features(x.size());
    std::iota(features.begin(), features.end(), std::size_t{0});
    const auto n = sample.size();
    Builder b{x, y, config, features_per_split(config, x.size()), Rng(seed), importance, nodes_,
              std::move(sample), std::move(features), {}};
    b.grow(0, n, 0);
}

auto RegressionTree::predict(std::span<const double> row) const -> double
{
    std::size_t i = 0;
    while (nodes_[i].left >= 0) {
        i = static_cast<std::size_t>(row[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left
                                                                                      : nodes_[i].right);
    }
    return nodes_[i].value;
}

auto forest_importance(const FeatureColumns& x, std::span<const double> y, const ForestConfig& config)
    -> std::vector<double>
{
    check_table(x, y);
    std::vector<std::vector<double>> per_tree(config.trees);
    const auto trees = static_cast<std::int64_t>(config.trees);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t t = 0; t < trees; ++t) {
        per_tree[static_cast<std::size_t>(t)] = tree_importance(x, y, config, static_cast<std::size_t>(t));
    }
    std::vector<double> total(x.size(), 0.0);
    for (const auto& imp : per_tree) {
        for (std::size_t f = 0; f < total.size(); ++f) { total[f] += imp[f]; }
    }
    return normalize_importance(std::move(total));
}

namespace serial {

auto forest_importance(const FeatureColumns& x, std::span<const double> y, const ForestConfig& config)
    -> std::vector<double>
{
    check_table(x, y);
    std::vector<double> total(x.size(), 0.0);
    for (std::size_t t = 0; t < config.trees; ++t) {
        const auto imp = tree_importance(x, y, config, t);
        for (std::size_t f = 0; f < total.size(); ++f) { total[f] += imp[f]; }
    }
    return normalize_importance(std::move(total));
}

} // namespace serial

auto rf_importance(const Dataset& data, std::size_t objective, const ForestConfig& config) -> std::vector<double>
{
    if (data.size() < 50) { throw Error("random forest importance needs at least 50 rows"); }
    if (objective >= data.problem().objective_count()) { throw Error("objective index out of range"); }
    FeatureColumns x;
    for (std::size_t p = 0; p < data.problem().dimension(); ++p) { x.push_back(data.param_column(p)); }
    const auto y = data.objective_column(objective);
    return forest_importance(x, y, config);
}

} // namespace cadro
