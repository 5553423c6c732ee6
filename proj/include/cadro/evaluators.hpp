#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cadro/problem.hpp"

namespace cadro {

struct EvaluationRequest {
    std::uint64_t id{0};
    std::vector<double> params; // declaration order of the problem
};

enum class EvalStatus { Ok, Failed };

struct EvaluationResult {
    std::uint64_t id{0};
    std::vector<double> objectives; // problem units; empty when Failed
    EvalStatus status{EvalStatus::Failed};
    std::string error;
};

/// Raised when more than half of a batch failed.
class EvaluationAborted : public Error {
public:
    using Error::Error;
};

/// Maps full parameter vectors to objective vectors.
///
/// Results come back in request order whatever the internal scheduling, and a
/// batch in which more than half of the requests fail throws
/// EvaluationAborted.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    auto evaluate_batch(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult>;

protected:
    /// Implementations may return results in any order; ids must match.
    virtual auto do_evaluate(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult> = 0;
};

using ObjectiveFunction = std::function<std::vector<double>(std::span<const double>)>;

/// Pure closed-form evaluator with optional additive Gaussian noise.
///
/// The noise draw is a function of (seed, exact parameter bytes, objective),
/// so repeated evaluation of the same vector is bitwise identical and parallel
/// scheduling cannot change any value.
class AnalyticEvaluator final : public Evaluator {
public:
    AnalyticEvaluator(ObjectiveFunction fn, std::size_t objectives, double noise_sigma = 0.0,
                      std::uint64_t noise_seed = 0, bool parallel = true);

protected:
    auto do_evaluate(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult> override;

private:
    ObjectiveFunction fn_;
    std::size_t objectives_;
    double sigma_;
    std::uint64_t seed_;
    bool parallel_;
};

/// Child process speaking JSON Lines on stdin/stdout. Started lazily on the
/// first batch and restarted after a crash or timeout.
class ExternalEvaluator final : public Evaluator {
public:
    ExternalEvaluator(ProblemDefinition problem, ExternalBinding binding);
    ~ExternalEvaluator() override;
    ExternalEvaluator(const ExternalEvaluator&) = delete;
    auto operator=(const ExternalEvaluator&) -> ExternalEvaluator& = delete;

protected:
    auto do_evaluate(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult> override;

private:
    void spawn();
    void terminate();

    ProblemDefinition problem_;
    ExternalBinding binding_;
    int pid_{-1};
    int to_child_{-1};
    int from_child_{-1};
    std::string pending_; // partial reply line carried between reads
};

/// A built-in benchmark with its ground truth.
struct BuiltinProblem {
    std::string name;
    std::string description;
    ProblemDefinition definition;
    std::vector<std::string> true_drivers;
    double noise_sigma{0.0};
    /// Closed-form Pareto front in problem units, empty when unknown.
    std::vector<std::vector<double>> known_front;
    ObjectiveFunction function;
};

/// Built-in problems with default options.
auto list_builtin_problems() -> std::vector<BuiltinProblem>;

/// Instantiates a built-in problem. Options per family:
///  - zdt1-padded / zdt2-padded: d_active (2), d_inert (8)
///  - dtlz2-padded: objectives (3), d_active (5), d_inert (5)
///  - planted: d (10), k (3), sigma (0)
///  - ota-surrogate: none
auto make_builtin(std::string_view name, const nlohmann::json& options = nlohmann::json::object())
    -> BuiltinProblem;

/// Resolves the problem's builtin binding; throws ConfigError for external ones.
auto builtin_for(const ProblemDefinition& problem) -> BuiltinProblem;

struct EvaluatorOptions {
    bool parallel{true};
    std::uint64_t noise_seed{0};
};

auto make_evaluator(const ProblemDefinition& problem, const EvaluatorOptions& options = {})
    -> std::unique_ptr<Evaluator>;

} // namespace cadro
