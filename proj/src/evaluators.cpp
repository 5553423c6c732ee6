#include "cadro/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "cadro/rng.hpp"

namespace cadro {

auto Evaluator::evaluate_batch(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult>
{
    std::unordered_map<std::uint64_t, std::size_t> slot;
    slot.reserve(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        if (!slot.emplace(requests[i].id, i).second) { throw Error("duplicate request id in batch"); }
    }
    auto raw = do_evaluate(requests);

    std::vector<EvaluationResult> out(requests.size());
    std::vector<bool> filled(requests.size(), false);
    for (auto& r : raw) {
        auto it = slot.find(r.id);
        if (it == slot.end() || filled[it->second]) { continue; }
        if (r.status == EvalStatus::Ok
            && !std::all_of(r.objectives.begin(), r.objectives.end(), [](double v) { return std::isfinite(v); })) {
            r.status = EvalStatus::Failed;
            r.objectives.clear();
            r.error = "non-finite objective";
        }
        out[it->second] = std::move(r);
        filled[it->second] = true;
    }
    std::size_t failed = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!filled[i]) {
            out[i] = {requests[i].id, {}, EvalStatus::Failed, "no result"};
        }
        if (out[i].status == EvalStatus::Failed) { ++failed; }
    }
    if (2 * failed > out.size()) {
        throw EvaluationAborted("evaluation batch aborted: " + std::to_string(failed) + " of "
                                + std::to_string(out.size()) + " requests failed");
    }
    return out;
}

AnalyticEvaluator::AnalyticEvaluator(ObjectiveFunction fn, std::size_t objectives, double noise_sigma,
                                     std::uint64_t noise_seed, bool parallel)
    : fn_(std::move(fn))
    , objectives_(objectives)
    , sigma_(noise_sigma)
    , seed_(noise_seed)
    , parallel_(parallel)
{
}

auto AnalyticEvaluator::do_evaluate(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult>
{
    std::vector<EvaluationResult> out(requests.size());
    const auto n = static_cast<std::int64_t>(requests.size());
#pragma omp parallel for schedule(static) if (parallel_ && n > 1)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& req = requests[static_cast<std::size_t>(i)];
        auto& res = out[static_cast<std::size_t>(i)];
        res.id = req.id;
        auto f = fn_(req.params);
        if (f.size() != objectives_) {
            res.status = EvalStatus::Failed;
            res.error = "objective count mismatch";
            continue;
        }
        if (sigma_ > 0.0) {
            Rng rng(hash_values(req.params, seed_));
            for (double& v : f) { v += sigma_ * standard_normal(rng); }
        }
        res.objectives = std::move(f);
        res.status = EvalStatus::Ok;
    }
    return out;
}

// --- built-in problems ---------------------------------------------------

namespace {

auto unit_params(std::size_t d) -> std::vector<ParameterSpec>
{
    std::vector<ParameterSpec> ps;
    for (std::size_t i = 0; i < d; ++i) { ps.push_back({"x" + std::to_string(i + 1), 0.0, 1.0}); }
    return ps;
}

auto opt_size(const nlohmann::json& options, const char* key, std::size_t fallback) -> std::size_t
{
    if (!options.contains(key)) { return fallback; }
    const auto& v = options.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError(std::string("option '") + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

auto opt_real(const nlohmann::json& options, const char* key, double fallback) -> double
{
    if (!options.contains(key)) { return fallback; }
    if (!options.at(key).is_number()) { throw ConfigError(std::string("option '") + key + "' must be a number"); }
    return options.at(key).get<double>();
}

void reject_unknown(const nlohmann::json& options, std::initializer_list<std::string_view> known)
{
    check_keys(options, known, "problem option");
}

auto make_zdt(std::string_view name, const nlohmann::json& options, bool concave) -> BuiltinProblem
{
    reject_unknown(options, {"d_active", "d_inert"});
    const auto da = opt_size(options, "d_active", 2);
    const auto di = opt_size(options, "d_inert", 8);
    if (da < 1 || da + di < 2) { throw ConfigError("zdt needs d_active >= 1 and at least 2 parameters"); }

    BuiltinProblem bp;
    bp.name = std::string(name);
    bp.description = concave ? "ZDT2 with inert padding (concave front f2 = 1 - f1^2)"
                             : "ZDT1 with inert padding (convex front f2 = 1 - sqrt(f1))";
    bp.definition.parameters = unit_params(da + di);
    bp.definition.objectives = {{"f1", Direction::Minimize}, {"f2", Direction::Minimize}};
    bp.definition.evaluator = BuiltinBinding{bp.name, {{"d_active", da}, {"d_inert", di}}};
    for (std::size_t i = 0; i < da; ++i) { bp.true_drivers.push_back("x" + std::to_string(i + 1)); }
    // Coordinates past d_active carry weight zero and never enter the formulas.
    bp.function = [da, concave](std::span<const double> x) {
        const double f1 = x[0];
        double tail = 0.0;
        for (std::size_t i = 1; i < da; ++i) { tail += x[i]; }
        const double g = da > 1 ? 1.0 + 9.0 * tail / static_cast<double>(da - 1) : 1.0;
        const double h = concave ? 1.0 - (f1 / g) * (f1 / g) : 1.0 - std::sqrt(f1 / g);
        return std::vector<double>{f1, g * h};
    };
    constexpr std::size_t samples = 1000;
    for (std::size_t i = 0; i < samples; ++i) {
        const double f1 = static_cast<double>(i) / static_cast<double>(samples - 1);
        bp.known_front.push_back({f1, concave ? 1.0 - f1 * f1 : 1.0 - std::sqrt(f1)});
    }
    return bp;
}

auto make_dtlz2(const nlohmann::json& options) -> BuiltinProblem
{
    reject_unknown(options, {"objectives", "d_active", "d_inert"});
    const auto m = opt_size(options, "objectives", 3);
    const auto da = opt_size(options, "d_active", 5);
    const auto di = opt_size(options, "d_inert", 5);
    if (m < 2) { throw ConfigError("dtlz2 needs at least 2 objectives"); }
    if (da < m) { throw ConfigError("dtlz2 needs d_active >= objectives"); }

    BuiltinProblem bp;
    bp.name = "dtlz2-padded";
    bp.description = "DTLZ2 with inert padding (front on the unit sphere)";
    bp.definition.parameters = unit_params(da + di);
    for (std::size_t j = 0; j < m; ++j) {
        bp.definition.objectives.push_back({"f" + std::to_string(j + 1), Direction::Minimize});
    }
    bp.definition.evaluator = BuiltinBinding{bp.name, {{"objectives", m}, {"d_active", da}, {"d_inert", di}}};
    for (std::size_t i = 0; i < da; ++i) { bp.true_drivers.push_back("x" + std::to_string(i + 1)); }
    bp.function = [m, da](std::span<const double> x) {
        double g = 0.0;
        for (std::size_t i = m - 1; i < da; ++i) { g += (x[i] - 0.5) * (x[i] - 0.5); }
        std::vector<double> f(m, 1.0 + g);
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i + j + 1 < m; ++i) { f[j] *= std::cos(x[i] * std::numbers::pi / 2.0); }
            if (j > 0) { f[j] *= std::sin(x[m - j - 1] * std::numbers::pi / 2.0); }
        }
        return f;
    };
    // Front: unit sphere in the positive orthant.
    if (m == 2) {
        for (std::size_t i = 0; i < 1000; ++i) {
            const double t = static_cast<double>(i) / 999.0 * std::numbers::pi / 2.0;
            bp.known_front.push_back({std::cos(t), std::sin(t)});
        }
    } else {
        Rng rng(derive_seed(0, "dtlz2-front"));
        for (std::size_t i = 0; i < 1000; ++i) {
            std::vector<double> p(m);
            double norm = 0.0;
            for (double& v : p) {
                v = std::abs(standard_normal(rng));
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (double& v : p) { v /= norm; }
            bp.known_front.push_back(std::move(p));
        }
    }
    return bp;
}

auto make_planted(const nlohmann::json& options) -> BuiltinProblem
{
    reject_unknown(options, {"d", "k", "sigma"});
    const auto d = opt_size(options, "d", 10);
    const auto k = opt_size(options, "k", 3);
    const double sigma = opt_real(options, "sigma", 0.0);
    if (d < 2) { throw ConfigError("planted needs d >= 2"); }
    if (k < 1 || k > d) { throw ConfigError("planted needs 1 <= k <= d"); }
    if (!(sigma >= 0.0)) { throw ConfigError("planted needs sigma >= 0"); }

    BuiltinProblem bp;
    bp.name = "planted";
    bp.description = "planted drivers: f1 = sum w_i x_i^2, f2 = sum w_i (x_i - 1)^2, w_i = 1/i over the first k";
    bp.definition.parameters = unit_params(d);
    bp.definition.objectives = {{"f1", Direction::Minimize}, {"f2", Direction::Minimize}};
    bp.definition.evaluator = BuiltinBinding{bp.name, {{"d", d}, {"k", k}, {"sigma", sigma}}};
    bp.noise_sigma = sigma;
    double total_weight = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        bp.true_drivers.push_back("x" + std::to_string(i + 1));
        total_weight += 1.0 / static_cast<double>(i + 1);
    }
    bp.function = [k](std::span<const double> x) {
        double f1 = 0.0;
        double f2 = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = 1.0 / static_cast<double>(i + 1);
            f1 += w * x[i] * x[i];
            f2 += w * (x[i] - 1.0) * (x[i] - 1.0);
        }
        return std::vector<double>{f1, f2};
    };
    // Pareto set: x_1 = ... = x_k = t for t in [0, 1].
    for (std::size_t i = 0; i < 1000; ++i) {
        const double t = static_cast<double>(i) / 999.0;
        bp.known_front.push_back({total_weight * t * t, total_weight * (1.0 - t) * (1.0 - t)});
    }
    return bp;
}

auto make_ota(const nlohmann::json& options) -> BuiltinProblem
{
    reject_unknown(options, {});
    BuiltinProblem bp;
    bp.name = "ota-surrogate";
    bp.description = "square-law OTA surrogate: maximize gain and UGBW, minimize power";
    // Widths and lengths in um, bias current in uA, load in pF.
    bp.definition.parameters = {
        {"W1", 1.0, 100.0}, {"L1", 0.18, 2.0}, {"W3", 1.0, 100.0}, {"L3", 0.18, 2.0},
        {"Ibias", 10.0, 1000.0}, {"CL", 0.1, 10.0},
        {"D1", 0.0, 1.0}, {"D2", 0.0, 1.0}, {"D3", 0.0, 1.0}, {"D4", 0.0, 1.0},
    };
    bp.definition.objectives = {
        {"gain", Direction::Maximize}, {"ugbw", Direction::Maximize}, {"power", Direction::Minimize}};
    bp.definition.evaluator = BuiltinBinding{bp.name, nlohmann::json::object()};
    bp.true_drivers = {"W1", "L1", "Ibias", "CL"};
    bp.function = [](std::span<const double> x) {
        constexpr double kprime = 200e-6;
        constexpr double lambda = 0.1;
        constexpr double vdd = 1.8;
        const double ratio = x[0] / x[1];
        const double ibias = x[4] * 1e-6;
        const double cl = x[5] * 1e-12;
        const double gm = std::sqrt(2.0 * kprime * ratio * ibias / 2.0);
        const double ro = 1.0 / (lambda * ibias / 2.0);
        return std::vector<double>{gm * ro, gm / (2.0 * std::numbers::pi * cl), vdd * ibias};
    };
    return bp;
}

} // namespace

auto make_builtin(std::string_view name, const nlohmann::json& options) -> BuiltinProblem
{
    const auto& opts = options.is_null() ? nlohmann::json::object() : options;
    if (!opts.is_object()) { throw ConfigError("problem options must be a JSON object"); }
    if (name == "zdt1-padded") { return make_zdt(name, opts, false); }
    if (name == "zdt2-padded") { return make_zdt(name, opts, true); }
    if (name == "dtlz2-padded") { return make_dtlz2(opts); }
    if (name == "planted") { return make_planted(opts); }
    if (name == "ota-surrogate") { return make_ota(opts); }
    throw ConfigError("unknown built-in problem '" + std::string(name) + "'");
}

auto list_builtin_problems() -> std::vector<BuiltinProblem>
{
    std::vector<BuiltinProblem> out;
    for (const char* name : {"zdt1-padded", "zdt2-padded", "dtlz2-padded", "planted", "ota-surrogate"}) {
        out.push_back(make_builtin(name));
    }
    return out;
}

auto builtin_for(const ProblemDefinition& problem) -> BuiltinProblem
{
    const auto* b = std::get_if<BuiltinBinding>(&problem.evaluator);
    if (b == nullptr) { throw ConfigError("problem is not bound to a built-in evaluator"); }
    auto bp = make_builtin(b->name, b->options);
    if (bp.definition.dimension() != problem.dimension()
        || bp.definition.objective_count() != problem.objective_count()) {
        throw ConfigError("problem definition does not match built-in '" + b->name + "'");
    }
    return bp;
}

auto make_evaluator(const ProblemDefinition& problem, const EvaluatorOptions& options) -> std::unique_ptr<Evaluator>
{
    if (const auto* ext = std::get_if<ExternalBinding>(&problem.evaluator)) {
        return std::make_unique<ExternalEvaluator>(problem, *ext);
    }
    auto bp = builtin_for(problem);
    return std::make_unique<AnalyticEvaluator>(bp.function, bp.definition.objective_count(), bp.noise_sigma,
                                               options.noise_seed, options.parallel);
}

} // namespace cadro
