#include "cadro/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace cadro {

namespace fs = std::filesystem;

// --- configuration -------------------------------------------------------

namespace {

auto resolve_problem(const nlohmann::json& j) -> ProblemDefinition
{
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s.ends_with(".json")) { return load_json_file(s).get<ProblemDefinition>(); }
        return make_builtin(s).definition;
    }
    if (j.is_object() && j.contains("builtin") && !j.contains("parameters")) {
        return make_builtin(j["builtin"].get<std::string>(), j.value("options", nlohmann::json::object())).definition;
    }
    if (j.is_object()) { return j.get<ProblemDefinition>(); }
    throw ConfigError("'problem' must be a built-in name, a built-in binding or a problem definition");
}

auto seconds_since(std::chrono::steady_clock::time_point t0) -> double
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// GA settings used for a phase: generations default to "until the budget
/// is spent" and the seed comes from the run seed.
auto phase_ga(GAConfig ga, std::uint64_t budget, std::uint64_t seed) -> GAConfig
{
    if (ga.generations == 0) { ga.generations = static_cast<std::size_t>(budget); }
    ga.seed = seed;
    return ga;
}

auto design_json(const EvaluatedDesign& d, const ProblemDefinition& problem) -> nlohmann::json
{
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json objectives = nlohmann::json::object();
    for (std::size_t i = 0; i < d.params.size(); ++i) { params[problem.parameters[i].name] = d.params[i]; }
    for (std::size_t i = 0; i < d.objectives.size(); ++i) { objectives[problem.objectives[i].name] = d.objectives[i]; }
    return {{"eval_index", d.eval_index}, {"tag", to_string(d.tag)}, {"params", params}, {"objectives", objectives}};
}

auto front_json(const ParetoArchive& a, const ProblemDefinition& problem) -> nlohmann::json
{
    auto out = nlohmann::json::array();
    for (const auto& m : a.members()) { out.push_back(design_json(m, problem)); }
    return out;
}

auto budget_json(const BudgetBreakdown& b) -> nlohmann::json
{
    return {{"exploration", b.exploration}, {"intervention", b.intervention}, {"focused", b.focused},
            {"total", b.total()}};
}

auto objectives_of(const ParetoArchive& a) -> std::vector<std::vector<double>>
{
    std::vector<std::vector<double>> out;
    for (const auto& m : a.members()) { out.push_back(m.objectives); }
    return out;
}

auto archive_of(std::span<const EvaluatedDesign> rows, const ProblemDefinition& problem) -> ParetoArchive
{
    ParetoArchive a(problem);
    for (const auto& r : rows) { a.insert(r); }
    return a;
}

auto known_front(const ProblemDefinition& problem) -> std::vector<std::vector<double>>
{
    if (!std::holds_alternative<BuiltinBinding>(problem.evaluator)) { return {}; }
    return builtin_for(problem).known_front;
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) { throw ConfigError("cannot create output directory '" + dir + "'"); }
}

} // namespace

void RunConfig::validate() const
{
    problem.validate();
    if (exploration_budget == 0) { throw ConfigError("exploration_budget must be positive"); }
    if (!(intervention_budget_fraction >= 0.0 && intervention_budget_fraction <= 1.0)) {
        throw ConfigError("intervention_budget_fraction must be in [0,1]");
    }
    exploration.validate();
    phase3.validate();
    if (exploration_budget < exploration.population_size) {
        throw ConfigError("exploration_budget is smaller than the exploration population");
    }
    if (phase3_budget && *phase3_budget == 0) { throw ConfigError("phase3_budget must be positive"); }
    if (min_active < 1) { throw ConfigError("min_active must be at least 1"); }
    if (matched_budget && *matched_budget < exploration_budget) {
        throw ConfigError("matched_budget is below exploration_budget");
    }
}

auto RunConfig::intervention_budget() const -> std::uint64_t
{
    return static_cast<std::uint64_t>(std::floor(intervention_budget_fraction * static_cast<double>(exploration_budget)));
}

auto RunConfig::focused_budget() const -> std::uint64_t { return phase3_budget.value_or(exploration_budget); }

namespace {

void reject_negative_integers(const nlohmann::json& j, const std::string& where)
{
    if (j.is_number_integer() && j.get<std::int64_t>() < 0) {
        throw ConfigError("'" + where + "' must not be negative");
    }
    if (j.is_object()) {
        for (const auto& [key, value] : j.items()) { reject_negative_integers(value, where + "." + key); }
    }
}

} // namespace

auto parse_run_config(const nlohmann::json& j) -> RunConfig
{
    static const std::set<std::string> known{
        "problem",      "exploration_budget", "exploration",   "intervention_budget_fraction",
        "discovery",    "pruning",            "min_active",    "phase3",
        "phase3_budget", "matched_budget",    "target_hypervolume", "seed",
        "output_dir",   "parallel"};
    if (!j.is_object()) { throw ConfigError("config must be a JSON object"); }
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) { throw ConfigError("unknown config key '" + key + "'"); }
    }
    if (!j.contains("problem")) { throw ConfigError("config lacks 'problem'"); }
    // Every integer outside the problem is a count or a seed.
    for (const auto& [key, value] : j.items()) {
        if (key != "problem") { reject_negative_integers(value, key); }
    }

    RunConfig c;
    try {
        c.problem = resolve_problem(j["problem"]);
        c.exploration_budget = j.value("exploration_budget", c.exploration_budget);
        if (j.contains("exploration")) { from_json(j["exploration"], c.exploration); }
        c.intervention_budget_fraction = j.value("intervention_budget_fraction", c.intervention_budget_fraction);
        if (j.contains("discovery")) { from_json(j["discovery"], c.discovery); }
        if (j.contains("pruning")) { c.pruning = j["pruning"].get<PruningStrategy>(); }
        c.min_active = j.value("min_active", c.min_active);
        if (j.contains("phase3")) { from_json(j["phase3"], c.phase3); }
        if (j.contains("phase3_budget") && !j["phase3_budget"].is_null()) {
            c.phase3_budget = j["phase3_budget"].get<std::uint64_t>();
        }
        if (j.contains("matched_budget") && !j["matched_budget"].is_null()) {
            c.matched_budget = j["matched_budget"].get<std::uint64_t>();
        }
        c.target_hypervolume = j.value("target_hypervolume", c.target_hypervolume);
        c.seed = j.value("seed", c.seed);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.parallel = j.value("parallel", c.parallel);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

void to_json(nlohmann::json& j, const RunConfig& c)
{
    j = {{"problem", c.problem},
         {"exploration_budget", c.exploration_budget},
         {"exploration", c.exploration},
         {"intervention_budget_fraction", c.intervention_budget_fraction},
         {"discovery", c.discovery},
         {"pruning", c.pruning},
         {"min_active", c.min_active},
         {"phase3", c.phase3},
         {"target_hypervolume", c.target_hypervolume},
         {"seed", c.seed},
         {"output_dir", c.output_dir},
         {"parallel", c.parallel}};
    j["phase3_budget"] = c.phase3_budget ? nlohmann::json(*c.phase3_budget) : nlohmann::json(nullptr);
    j["matched_budget"] = c.matched_budget ? nlohmann::json(*c.matched_budget) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const RunReport& r)
{
    j = {{"problem", r.problem},
         {"seed", r.seed},
         {"budget", budget_json(r.budget)},
         {"evaluations", r.evaluations},
         {"plan", r.plan},
         {"graph", r.graph},
         {"fronts",
          {{"exploration", front_json(r.exploration_front, r.problem)},
           {"focused", front_json(r.focused_front, r.problem)},
           {"final", front_json(r.final_front, r.problem)}}}};
    j["metrics"] = r.metrics ? nlohmann::json(*r.metrics) : nlohmann::json(nullptr);
}

// --- persistence ---------------------------------------------------------

void save_front_csv(const std::string& path, const ParetoArchive& front, const ProblemDefinition& problem)
{
    Dataset d(problem);
    auto members = front.members();
    std::sort(members.begin(), members.end(),
              [](const EvaluatedDesign& a, const EvaluatedDesign& b) { return a.eval_index < b.eval_index; });
    for (auto& m : members) { d.append(std::move(m)); }
    save_dataset_csv(path, d);
}

void save_trace_csv(const std::string& path, std::span<const TracePoint> trace)
{
    std::ofstream out(path);
    if (!out) { throw Error("cannot write '" + path + "'"); }
    out << "evaluations,hypervolume\n";
    for (const auto& t : trace) { out << t.evaluations << ',' << format_double(t.hypervolume) << '\n'; }
}

auto load_run_state(const std::string& dir) -> BudgetBreakdown
{
    const auto j = load_json_file((fs::path(dir) / "run_state.json").string());
    try {
        const auto& b = j.at("budget");
        return {b.at("exploration").get<std::uint64_t>(), b.at("intervention").get<std::uint64_t>(),
                b.at("focused").get<std::uint64_t>()};
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run_state.json: ") + e.what());
    }
}

// --- pipeline ------------------------------------------------------------

Pipeline::Pipeline(RunConfig config, std::ostream* log)
    : config_(std::move(config))
    , evaluator_(make_evaluator(config_.problem, {config_.parallel, derive_seed(config_.seed, "noise")}))
    , session_(config_.problem, *evaluator_)
    , log_(log)
{
}

void Pipeline::log(const std::string& msg) const
{
    if (log_ != nullptr) { *log_ << msg << '\n'; }
}

auto Pipeline::explore() -> ParetoArchive
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto budget = config_.exploration_budget;
    Nsga2Options opt;
    opt.tag = Tag::Exploration;
    opt.max_evaluations = budget;
    opt.progress = progress_;
    opt.phase_label = "exploration";
    const auto kf = known_front(config_.problem);
    if (!kf.empty()) { opt.frame = frame_from_front(kf, config_.problem); }
    const auto ga = phase_ga(config_.exploration, budget, derive_seed(config_.seed, "exploration"));
    auto result = run_nsga2(SearchSpace::full(config_.problem), ga, session_, opt);
    times_.exploration = seconds_since(t0);
    log("exploration: " + std::to_string(session_.budget().exploration) + " evaluations, "
        + std::to_string(result.archive.size()) + " non-dominated");
    return std::move(result.archive);
}

auto Pipeline::discover() -> CausalGraph
{
    const auto t0 = std::chrono::steady_clock::now();
    auto dc = config_.discovery;
    dc.intervention_budget = config_.intervention_budget();
    dc.seed = derive_seed(config_.seed, "discovery");
    dc.forest.seed = derive_seed(config_.seed, "forest");
    const auto data = session_.dataset().filter(Tag::Exploration);
    auto graph = cadro::discover(data, session_, dc);
    times_.discovery = seconds_since(t0);
    std::size_t confirmed = 0;
    for (const auto& l : graph.links) { confirmed += l.status == LinkStatus::Confirmed ? 1 : 0; }
    log("discovery: " + std::to_string(graph.links.size()) + " links, " + std::to_string(confirmed)
        + " confirmed, " + std::to_string(graph.budget_used) + " intervention evaluations");
    return graph;
}

auto Pipeline::reduce(const CausalGraph& graph, const ParetoArchive& exploration) -> ReductionPlan
{
    const auto t0 = std::chrono::steady_clock::now();
    auto plan = make_plan(graph, exploration, config_.problem, config_.pruning, config_.min_active);
    times_.reduction = seconds_since(t0);
    std::string active;
    for (const auto& a : plan.active) { active += (active.empty() ? "" : ",") + a; }
    log("reduction: active {" + active + "}, " + std::to_string(plan.pruned.size()) + " pruned");
    return plan;
}

auto Pipeline::optimize(const ReductionPlan& plan, const ParetoArchive& exploration,
                        std::optional<std::uint64_t> budget) -> ParetoArchive
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto& problem = config_.problem;
    const auto space = search_space(plan, problem);
    const auto n = config_.phase3.population_size;
    const auto b = budget.value_or(config_.focused_budget());
    if (b < n) { throw ConfigError("Phase-3 budget is smaller than the Phase-3 population"); }

    // Warm start: projected archive members, least crowded first.
    std::vector<std::size_t> order(exploration.size());
    for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
    if (exploration.size() > n) {
        const auto crowd = crowding_distance(exploration.points());
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) { return crowd[a] > crowd[c]; });
    }
    Nsga2Options opt;
    std::set<Genes> seen;
    for (auto i : order) {
        auto g = space.project(exploration.members()[i].params);
        if (seen.insert(g).second) { opt.initial.push_back(std::move(g)); }
        if (opt.initial.size() == n) { break; }
    }
    opt.tag = Tag::Focused;
    opt.max_evaluations = b;
    opt.progress = progress_;
    opt.phase_label = "focused";
    const auto kf = known_front(problem);
    if (!kf.empty()) { opt.frame = frame_from_front(kf, problem); }
    const auto ga = phase_ga(config_.phase3, b, derive_seed(config_.seed, "focused"));
    auto result = run_nsga2(space, ga, session_, opt);
    times_.focused = seconds_since(t0);
    log("focused: " + std::to_string(session_.budget().focused) + " evaluations, "
        + std::to_string(result.archive.size()) + " non-dominated");
    return std::move(result.archive);
}

void Pipeline::restore(const std::string& dir, std::initializer_list<Tag> keep)
{
    const auto all = load_dataset_csv((fs::path(dir) / "dataset.csv").string(), config_.problem);
    auto saved = load_run_state(dir);
    Dataset kept(config_.problem);
    BudgetBreakdown budget;
    for (auto t : keep) { budget[t] = saved[t]; }
    for (const auto& r : all.rows()) {
        if (std::find(keep.begin(), keep.end(), r.tag) != keep.end()) { kept.append(r); }
    }
    session_.restore(kept, budget);
}

void Pipeline::save_session(const std::string& dir) const
{
    save_dataset_csv((fs::path(dir) / "dataset.csv").string(), session_.dataset());
    save_json_file((fs::path(dir) / "run_state.json").string(),
                   {{"budget", budget_json(session_.budget())}, {"evaluations", session_.evaluations()},
                    {"failures", session_.failures()}});
}

auto Pipeline::exploration_archive() const -> ParetoArchive
{
    const auto data = session_.dataset().filter(Tag::Exploration);
    return archive_of(data.rows(), config_.problem);
}

auto Pipeline::assemble_report(const CausalGraph& graph, const ReductionPlan& plan, const ParetoArchive& exploration,
                               const ParetoArchive& focused) const -> RunReport
{
    const auto& problem = config_.problem;
    RunReport r;
    r.problem = problem;
    r.seed = config_.seed;
    r.graph = graph;
    r.plan = plan;
    r.exploration_front = exploration;
    r.focused_front = focused;
    r.final_front = archive_of(session_.dataset().rows(), problem);
    r.budget = session_.budget();
    r.evaluations = session_.evaluations();
    if (!exploration.empty() && !focused.empty()) {
        const auto kf = known_front(problem);
        r.metrics = compare_fronts(objectives_of(exploration), objectives_of(focused), problem, kf,
                                   r.budget.exploration, r.budget.focused);
    }
    const auto& rows = session_.dataset().rows();
    if (!rows.empty()) { r.trace = hypervolume_trace(rows, problem, trace_frame(problem, rows)); }
    r.times = times_;
    return r;
}

auto run_pipeline(const RunConfig& config, std::ostream* log) -> RunReport
{
    config.validate();
    const auto& dir = config.output_dir;
    ensure_dir(dir);
    const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };

    Pipeline p(config, log);
    std::ofstream progress(path("progress.jsonl"));
    p.set_progress(&progress);
    try {
        auto exploration = p.explore();
        save_front_csv(path("front_exploration.csv"), exploration, config.problem);
        p.save_session(dir);

        auto graph = p.discover();
        save_json_file(path("causal_graph.json"), graph);
        {
            std::ofstream out(path("causal_strengths.csv"));
            write_strengths_csv(out, graph);
        }
        p.save_session(dir);

        auto plan = p.reduce(graph, exploration);
        save_json_file(path("reduction_plan.json"), plan);

        auto focused = p.optimize(plan, exploration);
        save_front_csv(path("front_focused.csv"), focused, config.problem);
        p.save_session(dir);

        auto report = p.assemble_report(graph, plan, exploration, focused);
        save_json_file(path("report.json"), report);
        save_trace_csv(path("hv_trace.csv"), report.trace);
        const auto& t = report.times;
        save_json_file(path("timing.json"), {{"exploration_s", t.exploration},
                                             {"discovery_s", t.discovery},
                                             {"reduction_s", t.reduction},
                                             {"focused_s", t.focused}});
        return report;
    } catch (...) {
        // Keep whatever was evaluated before the failure.
        try {
            p.save_session(dir);
        } catch (...) {
        }
        throw;
    }
}

// --- comparison ----------------------------------------------------------

auto to_string(SpaceMode m) -> std::string_view
{
    return m == SpaceMode::FullSpace ? "full" : "reduced";
}

auto trace_frame(const ProblemDefinition& problem, std::span<const EvaluatedDesign> rows) -> HvFrame
{
    const auto kf = known_front(problem);
    if (!kf.empty()) { return frame_from_front(kf, problem); }
    std::vector<std::vector<double>> pts;
    for (const auto& r : rows) { pts.push_back(to_minimization(r.objectives, problem)); }
    if (pts.empty()) { throw Error("no evaluations to build a frame from"); }
    return frame_from_points(pts);
}

auto hypervolume_trace(std::span<const EvaluatedDesign> rows, const ProblemDefinition& problem, const HvFrame& frame)
    -> std::vector<TracePoint>
{
    // Exact 2D hypervolume is cheap enough to evaluate after every insert.
    const std::uint64_t stride = problem.objective_count() == 2 ? 1 : 50;
    ParetoArchive archive(problem);
    std::vector<TracePoint> trace;
    std::uint64_t last = 0;
    bool dirty = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].eval_index < rows[i - 1].eval_index) { throw Error("trace rows out of order"); }
        dirty = archive.insert(rows[i]) || dirty;
        const auto evals = rows[i].eval_index + 1;
        if (dirty && (evals - last >= stride || i + 1 == rows.size())) {
            trace.push_back({evals, frame.hypervolume(archive)});
            last = evals;
            dirty = false;
        }
    }
    return trace;
}

auto evaluations_to_reach(std::span<const TracePoint> trace, double target) -> std::optional<std::uint64_t>
{
    for (const auto& t : trace) {
        if (t.hypervolume >= target) { return t.evaluations; }
    }
    return std::nullopt;
}

auto run_space(const RunConfig& config, SpaceMode mode, std::uint64_t budget, std::ostream* log) -> SpaceRun
{
    config.validate();
    SpaceRun run;
    run.mode = mode;
    Pipeline p(config, log);
    if (mode == SpaceMode::ReducedSpace) {
        if (budget < config.exploration_budget) { throw ConfigError("matched_budget is below exploration_budget"); }
        auto exploration = p.explore();
        auto graph = p.discover();
        auto plan = p.reduce(graph, exploration);
        const auto spent = p.session().evaluations();
        if (budget < spent + config.phase3.population_size) {
            throw ConfigError("matched_budget leaves no room for Phase 3");
        }
        auto focused = p.optimize(plan, exploration, budget - spent);
        run.report = p.assemble_report(graph, plan, exploration, focused);
    } else {
        Nsga2Options opt;
        opt.tag = Tag::Exploration;
        opt.max_evaluations = budget;
        opt.phase_label = "full";
        const auto kf = known_front(config.problem);
        if (!kf.empty()) { opt.frame = frame_from_front(kf, config.problem); }
        const auto ga = phase_ga(config.phase3, budget, derive_seed(config.seed, "full"));
        run_nsga2(SearchSpace::full(config.problem), ga, p.session(), opt);
        if (log != nullptr) { *log << "full space: " << p.session().evaluations() << " evaluations\n"; }
    }
    run.data = p.session().dataset();
    run.front = archive_of(run.data.rows(), config.problem);
    run.budget = p.session().budget();
    run.evaluations = p.session().evaluations();
    return run;
}

void to_json(nlohmann::json& j, const ComparisonResult& r)
{
    const auto side = [&](const SpaceRun& s, double hv) {
        nlohmann::json out = {{"mode", to_string(s.mode)},
                              {"budget", budget_json(s.budget)},
                              {"evaluations", s.evaluations},
                              {"hypervolume", hv},
                              {"front", front_json(s.front, s.data.problem())}};
        out["evaluations_to_target"] =
            s.evaluations_to_target ? nlohmann::json(*s.evaluations_to_target) : nlohmann::json(nullptr);
        if (s.report) { out["plan"] = s.report->plan; }
        return out;
    };
    j = {{"target_hypervolume", r.target_hypervolume},
         {"reduced", side(r.reduced, r.reduced_hypervolume)},
         {"full", side(r.full, r.full_hypervolume)},
         {"metrics", r.metrics}};
}

auto run_comparison(const RunConfig& config, std::ostream* log) -> ComparisonResult
{
    config.validate();
    const auto matched = config.matched_budget.value_or(config.exploration_budget + config.intervention_budget()
                                                         + config.focused_budget());
    if (matched < config.exploration_budget) { throw ConfigError("matched_budget is below exploration_budget"); }

    ComparisonResult r;
    r.target_hypervolume = config.target_hypervolume;
    r.reduced = run_space(config, SpaceMode::ReducedSpace, matched, log);
    r.full = run_space(config, SpaceMode::FullSpace, r.reduced.evaluations, log);

    const auto& problem = config.problem;
    std::vector<EvaluatedDesign> pooled = r.reduced.data.rows();
    pooled.insert(pooled.end(), r.full.data.rows().begin(), r.full.data.rows().end());
    const auto frame = trace_frame(problem, pooled);
    for (auto* s : {&r.reduced, &r.full}) {
        s->trace = hypervolume_trace(s->data.rows(), problem, frame);
        s->evaluations_to_target = evaluations_to_reach(s->trace, config.target_hypervolume);
    }
    r.reduced_hypervolume = frame.hypervolume(r.reduced.front);
    r.full_hypervolume = frame.hypervolume(r.full.front);
    r.metrics = compare_fronts(objectives_of(r.reduced.front), objectives_of(r.full.front), problem,
                               known_front(problem), r.reduced.evaluations, r.full.evaluations);

    if (!config.output_dir.empty()) {
        const auto& dir = config.output_dir;
        ensure_dir(dir);
        const auto path = [&](const char* name) { return (fs::path(dir) / name).string(); };
        save_json_file(path("comparison.json"), r);
        save_front_csv(path("front_reduced.csv"), r.reduced.front, problem);
        save_front_csv(path("front_full.csv"), r.full.front, problem);
        save_trace_csv(path("hv_trace_reduced.csv"), r.reduced.trace);
        save_trace_csv(path("hv_trace_full.csv"), r.full.trace);
        save_dataset_csv(path("dataset_reduced.csv"), r.reduced.data);
        save_dataset_csv(path("dataset_full.csv"), r.full.data);
    }
    return r;
}

} // namespace cadro
