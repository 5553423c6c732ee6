#pragma once

#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cadro/causal.hpp"
#include "cadro/metrics.hpp"
#include "cadro/nsga2.hpp"
#include "cadro/reduction.hpp"
#include "cadro/session.hpp"

namespace cadro {

struct RunConfig {
    ProblemDefinition problem;
    std::uint64_t exploration_budget{8000};
    GAConfig exploration{200, 0, 0.9, std::nullopt, 15.0, 20.0, 0};
    double intervention_budget_fraction{0.10};
    DiscoveryConfig discovery;
    PruningStrategy pruning;
    std::size_t min_active{2};
    GAConfig phase3{100, 0, 0.9, std::nullopt, 15.0, 20.0, 0};
    std::optional<std::uint64_t> phase3_budget; // exploration_budget when unset
    std::optional<std::uint64_t> matched_budget; // compare only
    double target_hypervolume{0.6};              // compare only
    std::uint64_t seed{0};
    std::string output_dir{"cadro-out"};
    bool parallel{true};

    void validate() const;
    [[nodiscard]] auto intervention_budget() const -> std::uint64_t;
    [[nodiscard]] auto focused_budget() const -> std::uint64_t;
};

/// Accepts `problem` as a built-in name, {"builtin": name, "options": {...}},
/// or a full problem definition.
auto parse_run_config(const nlohmann::json& j) -> RunConfig;
void to_json(nlohmann::json& j, const RunConfig& c);

/// Hypervolume of the running archive after a given number of simulations.
struct TracePoint {
    std::uint64_t evaluations{0};
    double hypervolume{0.0};
};

/// Wall-clock seconds per phase. Kept out of report.json so that reports are
/// reproducible byte for byte.
struct PhaseTimes {
    double exploration{0.0};
    double discovery{0.0};
    double reduction{0.0};
    double focused{0.0};
};

struct RunReport {
    ProblemDefinition problem;
    std::uint64_t seed{0};
    CausalGraph graph;
    ReductionPlan plan;
    ParetoArchive exploration_front;
    ParetoArchive focused_front;
    ParetoArchive final_front; // all successful evaluations of the run
    std::optional<ComparisonReport> metrics; // exploration vs focused
    BudgetBreakdown budget;
    std::uint64_t evaluations{0}; // global counter
    std::vector<TracePoint> trace;
    PhaseTimes times;
};

void to_json(nlohmann::json& j, const RunReport& r);

/// Shared driver for monolithic runs and single-phase subcommands.
class Pipeline {
public:
    explicit Pipeline(RunConfig config, std::ostream* log = nullptr);

    /// Phase 1a: exploratory NSGA-II over the full space.
    auto explore() -> ParetoArchive;
    /// Phase 1b: causal graph from the exploration rows of the session dataset.
    auto discover() -> CausalGraph;
    /// Phase 2: pure function of the graph and the exploration archive.
    auto reduce(const CausalGraph& graph, const ParetoArchive& exploration) -> ReductionPlan;
    /// Phase 3: NSGA-II over the active parameters, warm-started from the
    /// exploration archive. `budget` overrides the configured focused budget.
    auto optimize(const ReductionPlan& plan, const ParetoArchive& exploration,
                  std::optional<std::uint64_t> budget = std::nullopt) -> ParetoArchive;

    /// Restores the session from a run directory, keeping only rows with the
    /// given tags and the matching budget counters.
    void restore(const std::string& dir, std::initializer_list<Tag> keep);
    /// Writes dataset.csv and run_state.json.
    void save_session(const std::string& dir) const;

    /// Exploration archive rebuilt from the session dataset.
    [[nodiscard]] auto exploration_archive() const -> ParetoArchive;
    [[nodiscard]] auto assemble_report(const CausalGraph& graph, const ReductionPlan& plan,
                                       const ParetoArchive& exploration, const ParetoArchive& focused) const
        -> RunReport;

    [[nodiscard]] auto session() -> EvaluationSession& { return session_; }
    [[nodiscard]] auto config() const -> const RunConfig& { return config_; }
    [[nodiscard]] auto times() -> PhaseTimes& { return times_; }
    void set_progress(std::ostream* progress) { progress_ = progress; }

private:
    void log(const std::string& msg) const;

    RunConfig config_;
    std::unique_ptr<Evaluator> evaluator_;
    EvaluationSession session_;
    std::ostream* log_;
    std::ostream* progress_{nullptr};
    PhaseTimes times_;
};

/// Runs all three phases and persists every artifact to config.output_dir.
auto run_pipeline(const RunConfig& config, std::ostream* log = nullptr) -> RunReport;

enum class SpaceMode { FullSpace, ReducedSpace };

auto to_string(SpaceMode m) -> std::string_view;

struct SpaceRun {
    SpaceMode mode{SpaceMode::ReducedSpace};
    Dataset data;
    ParetoArchive front; // every successful evaluation of the run
    BudgetBreakdown budget;
    std::uint64_t evaluations{0};
    std::vector<TracePoint> trace;
    std::optional<std::uint64_t> evaluations_to_target;
    std::optional<RunReport> report; // ReducedSpace only
};

struct ComparisonResult {
    SpaceRun reduced;
    SpaceRun full;
    ComparisonReport metrics; // a = reduced, b = full
    double target_hypervolume{0.6};
    double reduced_hypervolume{0.0}; // final trace values
    double full_hypervolume{0.0};
};

void to_json(nlohmann::json& j, const ComparisonResult& r);

/// One side of the matched-budget experiment. ReducedSpace runs the pipeline
/// with Phase 3 taking whatever remains of `budget`; FullSpace runs plain
/// NSGA-II (Phase-3 GA settings) on every parameter for `budget`
/// simulations. Nothing is persisted.
auto run_space(const RunConfig& config, SpaceMode mode, std::uint64_t budget, std::ostream* log = nullptr)
    -> SpaceRun;

/// Reduced run under config.matched_budget, then the full-space run with the
/// total the reduced run spent, then metrics and hypervolume traces for both.
/// Artifacts go to output_dir unless it is empty.
auto run_comparison(const RunConfig& config, std::ostream* log = nullptr) -> ComparisonResult;

/// Frame used for traces: the known front for analytic problems, else the
/// observed min-max of `rows`.
auto trace_frame(const ProblemDefinition& problem, std::span<const EvaluatedDesign> rows) -> HvFrame;

/// Hypervolume of the running archive while replaying rows in eval_index order.
auto hypervolume_trace(std::span<const EvaluatedDesign> rows, const ProblemDefinition& problem,
                       const HvFrame& frame) -> std::vector<TracePoint>;

/// Evaluations at the first trace point at or above `target`.
auto evaluations_to_reach(std::span<const TracePoint> trace, double target) -> std::optional<std::uint64_t>;

void save_front_csv(const std::string& path, const ParetoArchive& front, const ProblemDefinition& problem);
void save_trace_csv(const std::string& path, std::span<const TracePoint> trace);
auto load_run_state(const std::string& dir) -> BudgetBreakdown;

} // namespace cadro
