#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace cadro {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: malformed config, inconsistent problem, bad CLI args.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Direction { Minimize, Maximize };

/// Which phase produced an evaluation.
enum class Tag { Exploration, Intervention, Focused };

auto to_string(Direction d) -> std::string_view;
auto to_string(Tag t) -> std::string_view;
auto parse_direction(std::string_view s) -> Direction;
auto parse_tag(std::string_view s) -> Tag;

struct ParameterSpec {
    std::string name;
    double lower{0.0};
    double upper{1.0};
};

struct ObjectiveSpec {
    std::string name;
    Direction direction{Direction::Minimize};
};

/// Binds a problem to one of the analytic benchmarks shipped with the toolkit.
struct BuiltinBinding {
    std::string name;
    nlohmann::json options = nlohmann::json::object();
};

/// Binds a problem to an external simulator speaking the JSON Lines protocol.
/// The child is started as `command[0] <problem-json> command[1..]`.
struct ExternalBinding {
    std::vector<std::string> command;
    double timeout_s{60.0};
};

using EvaluatorBinding = std::variant<BuiltinBinding, ExternalBinding>;

struct ProblemDefinition {
    std::vector<ParameterSpec> parameters;
    std::vector<ObjectiveSpec> objectives;
    EvaluatorBinding evaluator;

    /// Throws ConfigError when bounds, names or sizes are inconsistent.
    void validate() const;

    [[nodiscard]] auto dimension() const -> std::size_t { return parameters.size(); }
    [[nodiscard]] auto objective_count() const -> std::size_t { return objectives.size(); }
    [[nodiscard]] auto parameter_index(std::string_view name) const -> std::size_t;
    [[nodiscard]] auto objective_index(std::string_view name) const -> std::size_t;
    [[nodiscard]] auto parameter_names() const -> std::vector<std::string>;
    [[nodiscard]] auto objective_names() const -> std::vector<std::string>;

    /// True when every coordinate lies inside its [lower, upper] box.
    [[nodiscard]] auto within_bounds(std::span<const double> params) const -> bool;
};

/// One full parameter vector with its measured objectives.
///
/// `params` and `objectives` are dense and follow the declaration order of the
/// owning ProblemDefinition. Objective values are stored in problem units and
/// direction, not in minimization form.
struct EvaluatedDesign {
    std::vector<double> params;
    std::vector<double> objectives;
    Tag tag{Tag::Exploration};
    std::uint64_t eval_index{0};

    friend auto operator==(const EvaluatedDesign&, const EvaluatedDesign&) -> bool = default;
};

/// Append-only table of evaluations belonging to a single problem.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(ProblemDefinition problem);

    /// Checks shape, bounds, finiteness and eval_index ordering.
    void append(EvaluatedDesign row);

    [[nodiscard]] auto problem() const -> const ProblemDefinition& { return problem_; }
    [[nodiscard]] auto rows() const -> const std::vector<EvaluatedDesign>& { return rows_; }
    [[nodiscard]] auto size() const -> std::size_t { return rows_.size(); }
    [[nodiscard]] auto empty() const -> bool { return rows_.empty(); }

    /// Rows carrying the given tag, in eval_index order.
    [[nodiscard]] auto filter(Tag tag) const -> Dataset;
    /// Column of parameter `p` over all rows.
    [[nodiscard]] auto param_column(std::size_t p) const -> std::vector<double>;
    [[nodiscard]] auto objective_column(std::size_t o) const -> std::vector<double>;

private:
    ProblemDefinition problem_;
    std::vector<EvaluatedDesign> rows_;
};

/// Objective vector in minimization form: Maximize objectives are negated.
auto to_minimization(std::span<const double> objectives, const ProblemDefinition& problem)
    -> std::vector<double>;

/// Min-max normalizes a set of minimization-form points column by column.
/// Constant columns map to 0.
auto normalize_points(std::span<const std::vector<double>> points) -> std::vector<std::vector<double>>;

/// Minimization-form objectives of `rows`, min-max normalized over the rows so
/// that 0 is best. Throws Error("empty set") on empty input.
auto normalize_objectives(std::span<const EvaluatedDesign> rows, const ProblemDefinition& problem)
    -> std::vector<std::vector<double>>;

/// Pareto dominance on minimization-form vectors.
auto dominates(std::span<const double> a, std::span<const double> b) -> bool;

// --- persistence ---------------------------------------------------------

void to_json(nlohmann::json& j, const ProblemDefinition& p);
void from_json(const nlohmann::json& j, ProblemDefinition& p);

/// Shortest decimal string that parses back to the same double.
auto format_double(double v) -> std::string;
auto parse_double(std::string_view s) -> double;

/// CSV header: eval_index,tag,<params...>,<objectives...>
void write_dataset_csv(std::ostream& out, const Dataset& data);
auto read_dataset_csv(std::istream& in, const ProblemDefinition& problem) -> Dataset;
void save_dataset_csv(const std::string& path, const Dataset& data);
auto load_dataset_csv(const std::string& path, const ProblemDefinition& problem) -> Dataset;

auto load_json_file(const std::string& path) -> nlohmann::json;
/// Throws ConfigError naming the first key of object `j` not in `known`.
void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> known, std::string_view what);
void save_json_file(const std::string& path, const nlohmann::json& j);

} // namespace cadro
