// cadro: command-line front end for the causal dimension-reduction pipeline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cadro/pipeline.hpp"

namespace fs = std::filesystem;
using namespace cadro;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool quiet{false};
};

auto env_seed() -> std::optional<std::uint64_t>
{
    const char* s = std::getenv("CADRO_SEED");
    if (s == nullptr || *s == '\0') { return std::nullopt; }
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 0);
        if (used != std::string(s).size()) { throw std::invalid_argument(s); }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("CADRO_SEED is not an integer: ") + s);
    }
}

auto load_config(const std::string& path, const Globals& g) -> RunConfig
{
    auto j = load_json_file(path);
    // --seed wins over CADRO_SEED, which wins over the config file.
    if (auto s = g.seed ? g.seed : env_seed()) { j["seed"] = *s; }
    if (g.out) { j["output_dir"] = *g.out; }
    if (j.is_object() && j.contains("problem") && j["problem"].is_string()) {
        // Relative problem paths are resolved against the config file.
        const auto p = j["problem"].get<std::string>();
        if (p.ends_with(".json") && fs::path(p).is_relative() && !fs::exists(p)) {
            j["problem"] = (fs::path(path).parent_path() / p).string();
        }
    }
    return parse_run_config(j);
}

auto file(const RunConfig& c, const char* name) -> std::string { return (fs::path(c.output_dir) / name).string(); }

void make_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) { throw ConfigError("cannot create output directory '" + dir + "'"); }
}

void require(const RunConfig& c, std::initializer_list<const char*> names)
{
    for (const auto* n : names) {
        if (!fs::exists(file(c, n))) {
            throw ConfigError(std::string("missing ") + n + " in '" + c.output_dir + "'; run the earlier phases first");
        }
    }
}

auto load_graph(const RunConfig& c) -> CausalGraph
{
    auto graph = load_json_file(file(c, "causal_graph.json")).get<CausalGraph>();
    for (const auto& l : graph.links) {
        (void)c.problem.parameter_index(l.param);
        (void)c.problem.objective_index(l.objective);
    }
    return graph;
}

void save_graph(const RunConfig& c, const CausalGraph& graph)
{
    save_json_file(file(c, "causal_graph.json"), graph);
    std::ofstream out(file(c, "causal_strengths.csv"));
    write_strengths_csv(out, graph);
}

void cmd_explore(const RunConfig& c, std::ostream* log)
{
    make_dir(c.output_dir);
    Pipeline p(c, log);
    std::ofstream progress(file(c, "progress.jsonl"));
    p.set_progress(&progress);
    auto exploration = p.explore();
    save_front_csv(file(c, "front_exploration.csv"), exploration, c.problem);
    p.save_session(c.output_dir);
}

void cmd_discover(const RunConfig& c, std::ostream* log)
{
    require(c, {"dataset.csv", "run_state.json"});
    Pipeline p(c, log);
    p.restore(c.output_dir, {Tag::Exploration});
    save_graph(c, p.discover());
    p.save_session(c.output_dir);
}

void cmd_reduce(const RunConfig& c, std::ostream* log)
{
    require(c, {"dataset.csv", "run_state.json", "causal_graph.json"});
    Pipeline p(c, log);
    p.restore(c.output_dir, {Tag::Exploration});
    const auto plan = p.reduce(load_graph(c), p.exploration_archive());
    save_json_file(file(c, "reduction_plan.json"), plan);
}

void cmd_optimize(const RunConfig& c, std::ostream* log)
{
    require(c, {"dataset.csv", "run_state.json", "causal_graph.json", "reduction_plan.json"});
    Pipeline p(c, log);
    p.restore(c.output_dir, {Tag::Exploration, Tag::Intervention});
    const auto graph = load_graph(c);
    const auto plan = load_json_file(file(c, "reduction_plan.json")).get<ReductionPlan>();
    plan.validate(c.problem);
    const auto exploration = p.exploration_archive();

    std::ofstream progress(file(c, "progress.jsonl"), std::ios::app);
    p.set_progress(&progress);
    const auto focused = p.optimize(plan, exploration);
    save_front_csv(file(c, "front_focused.csv"), focused, c.problem);
    p.save_session(c.output_dir);
    const auto report = p.assemble_report(graph, plan, exploration, focused);
    save_json_file(file(c, "report.json"), report);
    save_trace_csv(file(c, "hv_trace.csv"), report.trace);
}

void print_summary(const RunReport& r)
{
    std::cout << "budget: exploration " << r.budget.exploration << ", intervention " << r.budget.intervention
              << ", focused " << r.budget.focused << ", total " << r.evaluations << '\n';
    std::cout << "active:";
    for (const auto& a : r.plan.active) { std::cout << ' ' << a; }
    std::cout << "\npruned:";
    for (const auto& a : r.plan.pruned) { std::cout << ' ' << a; }
    std::cout << '\n';
    if (r.metrics) { std::cout << format_comparison_table(*r.metrics, "exploration", "focused"); }
}

auto cmd_metrics(const std::string& a_path, const std::string& b_path, const std::string& problem_path,
                 const Globals& g) -> int
{
    auto pj = load_json_file(problem_path);
    ProblemDefinition problem;
    try {
        problem = pj.contains("problem") ? parse_run_config(pj).problem : pj.get<ProblemDefinition>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed problem: ") + e.what());
    }
    problem.validate();
    const auto read = [&](const std::string& path) {
        std::vector<std::vector<double>> out;
        const auto data = load_dataset_csv(path, problem);
        for (const auto& r : data.rows()) { out.push_back(r.objectives); }
        if (out.empty()) { throw ConfigError("front '" + path + "' is empty"); }
        return out;
    };
    const auto a = read(a_path);
    const auto b = read(b_path);
    std::vector<std::vector<double>> known;
    if (std::holds_alternative<BuiltinBinding>(problem.evaluator)) { known = builtin_for(problem).known_front; }
    const auto report = compare_fronts(a, b, problem, known);
    const nlohmann::json j = report;
    if (g.out) {
        make_dir(*g.out);
        save_json_file((fs::path(*g.out) / "metrics.json").string(), j);
    }
    std::cout << j.dump(2) << '\n';
    if (!g.quiet) { std::cout << format_comparison_table(report, "A", "B"); }
    return 0;
}

} // namespace

auto main(int argc, char** argv) -> int
{
    CLI::App app{"Causal-guided dimension reduction for multi-objective optimization"};
    app.require_subcommand(1);
    Globals g;
    std::uint64_t seed = 0;
    std::string out;
    auto* seed_opt = app.add_option("--seed", seed, "Master seed; overrides CADRO_SEED and the config")->group("Global");
    auto* out_opt = app.add_option("--out", out, "Run directory; overrides output_dir")->group("Global");
    app.add_flag("--quiet,-q", g.quiet, "Suppress progress messages")->group("Global");

    std::string config_path;
    auto config_cmd = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        s->fallthrough();
        s->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
        return s;
    };
    auto* run = config_cmd("run", "Run all three phases");
    auto* explore = config_cmd("explore", "Phase 1a: exploratory NSGA-II");
    auto* discover = config_cmd("discover", "Phase 1b: causal discovery on the saved dataset");
    auto* reduce = config_cmd("reduce", "Phase 2: reduction plan from the saved graph");
    auto* optimize = config_cmd("optimize", "Phase 3: NSGA-II on the saved plan");
    auto* compare = config_cmd("compare", "Matched-budget reduced vs full-space comparison");
    std::optional<std::uint64_t> matched;
    compare->add_option("--matched-budget", matched, "Total simulations for both runs");

    auto* metrics = app.add_subcommand("metrics", "Compare two front CSV files");
    metrics->fallthrough();
    std::string front_a;
    std::string front_b;
    std::string problem_path;
    metrics->add_option("frontA", front_a)->required()->check(CLI::ExistingFile);
    metrics->add_option("frontB", front_b)->required()->check(CLI::ExistingFile);
    metrics->add_option("--problem", problem_path, "Problem definition or run config")
        ->required()
        ->check(CLI::ExistingFile);

    auto* bench = app.add_subcommand("bench", "Built-in benchmark problems");
    bench->require_subcommand(1);
    auto* bench_list = bench->add_subcommand("list", "Print the built-in problem names");
    bool verbose = false;
    bench_list->add_flag("--verbose,-v", verbose, "Include descriptions and sizes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_opt->count() > 0) { g.seed = seed; }
    if (out_opt->count() > 0) { g.out = out; }
    std::ostream* log = g.quiet ? nullptr : &std::cerr;

    try {
        if (bench_list->parsed()) {
            for (const auto& b : list_builtin_problems()) {
                std::cout << b.name;
                if (verbose) {
                    std::cout << "\t" << b.definition.dimension() << " params, " << b.definition.objective_count()
                              << " objectives\t" << b.description;
                }
                std::cout << '\n';
            }
            return 0;
        }
        if (metrics->parsed()) { return cmd_metrics(front_a, front_b, problem_path, g); }

        auto config = load_config(config_path, g);
        if (run->parsed()) {
            print_summary(run_pipeline(config, log));
        } else if (explore->parsed()) {
            cmd_explore(config, log);
        } else if (discover->parsed()) {
            cmd_discover(config, log);
        } else if (reduce->parsed()) {
            cmd_reduce(config, log);
        } else if (optimize->parsed()) {
            cmd_optimize(config, log);
        } else if (compare->parsed()) {
            if (matched) { config.matched_budget = *matched; }
            config.validate();
            const auto r = run_comparison(config, log);
            std::cout << "hypervolume: reduced " << r.reduced_hypervolume << ", full " << r.full_hypervolume << '\n';
            const auto show = [](const std::optional<std::uint64_t>& v) {
                return v ? std::to_string(*v) : std::string("not reached");
            };
            std::cout << "evaluations to " << r.target_hypervolume << ": reduced "
                      << show(r.reduced.evaluations_to_target) << ", full " << show(r.full.evaluations_to_target)
                      << '\n';
            std::cout << format_comparison_table(r.metrics, "reduced", "full");
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "cadro: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "cadro: " << e.what() << '\n';
        return 1;
    }
}
