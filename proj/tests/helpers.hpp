#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cadro/problem.hpp"
#include "cadro/rng.hpp"

namespace testing {

/// d unit-box parameters x1.., m minimized objectives f1.., bound to `builtin`.
inline auto unit_problem(std::size_t d, std::size_t m, std::string builtin = "planted",
                         nlohmann::json options = nlohmann::json::object()) -> cadro::ProblemDefinition
{
    cadro::ProblemDefinition p;
    for (std::size_t i = 0; i < d; ++i) { p.parameters.push_back({"x" + std::to_string(i + 1), 0.0, 1.0}); }
    for (std::size_t j = 0; j < m; ++j) {
        p.objectives.push_back({"f" + std::to_string(j + 1), cadro::Direction::Minimize});
    }
    p.evaluator = cadro::BuiltinBinding{std::move(builtin), std::move(options)};
    return p;
}

inline auto random_points(cadro::Rng& rng, std::size_t n, std::size_t m, double lo = 0.0, double hi = 1.0)
    -> std::vector<std::vector<double>>
{
    std::vector<std::vector<double>> pts(n, std::vector<double>(m));
    for (auto& p : pts) {
        for (auto& v : p) { v = cadro::uniform(rng, lo, hi); }
    }
    return pts;
}

/// Random points on a coarse integer grid, so ties and duplicates occur.
inline auto grid_points(cadro::Rng& rng, std::size_t n, std::size_t m, std::size_t levels)
    -> std::vector<std::vector<double>>
{
    std::vector<std::vector<double>> pts(n, std::vector<double>(m));
    for (auto& p : pts) {
        for (auto& v : p) { v = static_cast<double>(cadro::uniform_index(rng, levels)); }
    }
    return pts;
}

} // namespace testing

#include <functional>

#include "cadro/evaluators.hpp"

namespace testing {

/// Evaluator wrapping a plain function of the full parameter vector.
class FnEvaluator final : public cadro::Evaluator {
public:
    using Fn = std::function<std::vector<double>(const std::vector<double>&, std::uint64_t id)>;
    explicit FnEvaluator(Fn fn) : fn_(std::move(fn)) {}

protected:
    auto do_evaluate(std::span<const cadro::EvaluationRequest> reqs) -> std::vector<cadro::EvaluationResult> override
    {
        std::vector<cadro::EvaluationResult> out;
        for (const auto& r : reqs) {
            out.push_back({r.id, fn_(std::vector<double>(r.params.begin(), r.params.end()), r.id),
                           cadro::EvalStatus::Ok, {}});
        }
        return out;
    }

private:
    Fn fn_;
};

} // namespace testing
