#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cadro/evaluators.hpp"
#include "cadro/problem.hpp"

namespace cadro {

/// Outcome of evaluating one full parameter vector through a session.
struct Outcome {
    bool ok{false};
    std::vector<double> objectives; // problem units; empty when !ok
    std::uint64_t eval_index{0};    // index of the simulation that produced it
    bool cached{false};             // served from the memo, no simulation spent
};

/// Evaluations consumed per phase tag.
struct BudgetBreakdown {
    std::uint64_t exploration{0};
    std::uint64_t intervention{0};
    std::uint64_t focused{0};

    [[nodiscard]] auto total() const -> std::uint64_t { return exploration + intervention + focused; }
    auto operator[](Tag t) -> std::uint64_t&;
    friend auto operator==(const BudgetBreakdown&, const BudgetBreakdown&) -> bool = default;
};

/// Owns the global simulation counter of a run.
///
/// Every simulation gets the next eval_index, successful ones are appended to
/// the dataset, and a memo on exact parameter bytes makes sure a vector is
/// simulated at most once per run. Failed simulations consume an index but
/// are neither stored nor memoized.
class EvaluationSession {
public:
    EvaluationSession(ProblemDefinition problem, Evaluator& evaluator);

    /// Evaluates full parameter vectors, one outcome per input in input order.
    /// Propagates EvaluationAborted after accounting for the attempted batch.
    auto evaluate(std::span<const std::vector<double>> params, Tag tag) -> std::vector<Outcome>;

    /// Restores the state of a previous run from its dataset and counters.
    void restore(const Dataset& data, const BudgetBreakdown& budget);

    [[nodiscard]] auto problem() const -> const ProblemDefinition& { return dataset_.problem(); }
    [[nodiscard]] auto dataset() const -> const Dataset& { return dataset_; }
    [[nodiscard]] auto evaluations() const -> std::uint64_t { return counter_; }
    [[nodiscard]] auto budget() const -> const BudgetBreakdown& { return budget_; }
    /// Simulations that produced no stored design.
    [[nodiscard]] auto failures() const -> std::uint64_t { return counter_ - dataset_.size(); }

private:
    Evaluator* evaluator_;
    Dataset dataset_;
    std::uint64_t counter_{0};
    BudgetBreakdown budget_;
    std::unordered_map<std::string, std::size_t> memo_; // param bytes -> dataset row
};

} // namespace cadro
