#include "cadro/causal.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <ostream>

#include "cadro/stats.hpp"

namespace cadro {

auto to_string(LinkStatus s) -> std::string_view
{
    switch (s) {
    case LinkStatus::Candidate: return "candidate";
    case LinkStatus::Confirmed: return "confirmed";
    case LinkStatus::Rejected: return "rejected";
    }
    return "candidate";
}

auto parse_link_status(std::string_view s) -> LinkStatus
{
    if (s == "candidate") { return LinkStatus::Candidate; }
    if (s == "confirmed") { return LinkStatus::Confirmed; }
    if (s == "rejected") { return LinkStatus::Rejected; }
    throw ConfigError("unknown link status '" + std::string(s) + "'");
}

auto CausalGraph::link(std::string_view param, std::string_view objective) const -> const CausalLink&
{
    for (const auto& l : links) {
        if (l.param == param && l.objective == objective) { return l; }
    }
    throw Error("causal graph has no link " + std::string(param) + " -> " + std::string(objective));
}

void to_json(nlohmann::json& j, const CausalLink& l)
{
    nlohmann::json ev = {{"pearson_r", l.evidence.pearson_r},
                         {"pearson_p", l.evidence.pearson_p},
                         {"rf_importance", l.evidence.rf_importance},
                         {"mutual_info_norm", l.evidence.mutual_info_norm},
                         {"intervened", l.evidence.intervened}};
    ev["intervention_p"] = l.evidence.intervention_p ? nlohmann::json(*l.evidence.intervention_p) : nullptr;
    j = {{"param", l.param},         {"objective", l.objective}, {"effect", l.effect},
         {"confidence", l.confidence}, {"strength", l.strength}, {"status", to_string(l.status)},
         {"evidence", ev},           {"note", l.note}};
}

void from_json(const nlohmann::json& j, CausalLink& l)
{
    l.param = j.at("param").get<std::string>();
    l.objective = j.at("objective").get<std::string>();
    l.effect = j.at("effect").get<double>();
    l.confidence = j.at("confidence").get<double>();
    l.strength = j.at("strength").get<double>();
    l.status = parse_link_status(j.at("status").get<std::string>());
    l.note = j.value("note", std::string{});
    const auto& ev = j.at("evidence");
    l.evidence.pearson_r = ev.at("pearson_r").get<double>();
    l.evidence.pearson_p = ev.at("pearson_p").get<double>();
    l.evidence.rf_importance = ev.at("rf_importance").get<double>();
    l.evidence.mutual_info_norm = ev.at("mutual_info_norm").get<double>();
    l.evidence.intervened = ev.at("intervened").get<bool>();
    if (ev.contains("intervention_p") && !ev["intervention_p"].is_null()) {
        l.evidence.intervention_p = ev["intervention_p"].get<double>();
    }
}

void to_json(nlohmann::json& j, const CausalGraph& g)
{
    j = {{"budget_used", g.budget_used}, {"links", g.links}};
}

void from_json(const nlohmann::json& j, CausalGraph& g)
{
    try {
        g.budget_used = j.at("budget_used").get<std::uint64_t>();
        g.links = j.at("links").get<std::vector<CausalLink>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed causal graph: ") + e.what());
    }
}

void write_strengths_csv(std::ostream& out, const CausalGraph& graph)
{
    out << "param,objective,strength,confidence,status\n";
    for (const auto& l : graph.links) {
        out << l.param << ',' << l.objective << ',' << format_double(l.strength) << ','
            << format_double(l.confidence) << ',' << to_string(l.status) << '\n';
    }
}

void to_json(nlohmann::json& j, const DiscoveryConfig& c)
{
    j = {{"mi_bins", c.mi_bins},         {"forest", c.forest},       {"n_per_arm", c.n_per_arm},
         {"alpha", c.alpha},             {"band", {c.band_low, c.band_high}},
         {"intervention_budget", c.intervention_budget}};
}

void from_json(const nlohmann::json& j, DiscoveryConfig& c)
{
    check_keys(j, {"mi_bins", "forest", "n_per_arm", "alpha", "band", "intervention_budget"}, "discovery config");
    try {
        c.mi_bins = j.value("mi_bins", c.mi_bins);
        if (j.contains("forest")) { c.forest = j["forest"].get<ForestConfig>(); }
        c.n_per_arm = j.value("n_per_arm", c.n_per_arm);
        c.alpha = j.value("alpha", c.alpha);
        if (j.contains("band")) {
            c.band_low = j["band"].at(0).get<double>();
            c.band_high = j["band"].at(1).get<double>();
        }
        c.intervention_budget = j.value("intervention_budget", c.intervention_budget);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed discovery config: ") + e.what());
    }
    if (c.mi_bins < 2) { throw ConfigError("mi_bins must be at least 2"); }
    if (c.n_per_arm < 2) { throw ConfigError("n_per_arm must be at least 2"); }
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) { throw ConfigError("alpha must be in (0,1)"); }
    if (!(c.band_low < c.band_high)) { throw ConfigError("uncertainty band must satisfy low < high"); }
}

auto observational_confidence(const Evidence& evidence, std::size_t parameter_count) -> double
{
    double c = 0.5 * (1.0 - evidence.pearson_p);
    if (evidence.rf_importance > 1.0 / static_cast<double>(parameter_count)) { c += 0.2; }
    if (evidence.mutual_info_norm > 0.1) { c += 0.2; }
    return std::clamp(c, 0.0, 0.9);
}

namespace {

auto forest_for(const DiscoveryConfig& config, const std::string& objective) -> ForestConfig
{
    auto fc = config.forest;
    fc.seed = derive_seed(config.seed, "forest/" + objective);
    return fc;
}

auto pair_link(const Dataset& data, const std::vector<std::vector<double>>& rf, std::size_t p, std::size_t o,
               std::size_t bins) -> CausalLink
{
    const auto& problem = data.problem();
    const auto x = data.param_column(p);
    const auto y = data.objective_column(o);
    CausalLink link;
    link.param = problem.parameters[p].name;
    link.objective = problem.objectives[o].name;
    const auto pr = pearson(x, y);
    link.evidence.pearson_r = pr.r;
    link.evidence.pearson_p = pr.p;
    link.evidence.rf_importance = rf[o][p];
    link.evidence.mutual_info_norm = mutual_info(x, y, bins);
    link.confidence = observational_confidence(link.evidence, problem.dimension());
    link.effect = pr.r;
    link.strength = std::abs(pr.r);
    return link;
}

} // namespace

auto observational_links(const Dataset& data, const DiscoveryConfig& config) -> std::vector<CausalLink>
{
    const auto& problem = data.problem();
    const auto d = problem.dimension();
    const auto m = problem.objective_count();
    std::vector<std::vector<double>> rf;
    for (std::size_t o = 0; o < m; ++o) {
        if (data.size() < 50) { throw Error("random forest importance needs at least 50 rows"); }
        FeatureColumns x;
        for (std::size_t p = 0; p < d; ++p) { x.push_back(data.param_column(p)); }
        rf.push_back(forest_importance(x, data.objective_column(o), forest_for(config, problem.objectives[o].name)));
    }
    std::vector<CausalLink> links(d * m);
    const auto pairs = static_cast<std::int64_t>(d * m);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t k = 0; k < pairs; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        links[uk] = pair_link(data, rf, uk / m, uk % m, config.mi_bins);
    }
    return links;
}

namespace serial {

auto observational_links(const Dataset& data, const DiscoveryConfig& config) -> std::vector<CausalLink>
{
    const auto& problem = data.problem();
    const auto d = problem.dimension();
    const auto m = problem.objective_count();
    std::vector<std::vector<double>> rf;
    for (std::size_t o = 0; o < m; ++o) {
        if (data.size() < 50) { throw Error("random forest importance needs at least 50 rows"); }
        FeatureColumns x;
        for (std::size_t p = 0; p < d; ++p) { x.push_back(data.param_column(p)); }
        rf.push_back(cadro::serial::forest_importance(x, data.objective_column(o),
                                                      forest_for(config, problem.objectives[o].name)));
    }
    std::vector<CausalLink> links;
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t o = 0; o < m; ++o) { links.push_back(pair_link(data, rf, p, o, config.mi_bins)); }
    }
    return links;
}

} // namespace serial

auto intervene(const CausalLink& link, const Dataset& data, EvaluationSession& session, std::size_t n_per_arm,
               double alpha, Rng& rng) -> CausalLink
{
    if (link.status != LinkStatus::Candidate) { throw Error("only Candidate links can be intervened on"); }
    if (data.empty()) { throw Error("intervention needs an exploratory dataset"); }
    const auto& problem = data.problem();
    const auto p = problem.parameter_index(link.param);
    const auto o = problem.objective_index(link.objective);
    CausalLink out = link;

    const auto column = data.param_column(p);
    const double low = percentile(column, 25.0);
    const double high = percentile(column, 75.0);
    if (!(low < high)) {
        out.status = LinkStatus::Rejected;
        out.confidence = 0.0;
        out.effect = 0.0;
        out.strength = 0.0;
        out.note = "no variation";
        return out;
    }

    std::vector<std::vector<double>> designs;
    designs.reserve(2 * n_per_arm);
    for (std::size_t i = 0; i < n_per_arm; ++i) {
        std::vector<double> base(problem.dimension());
        for (std::size_t k = 0; k < base.size(); ++k) {
            base[k] = uniform(rng, problem.parameters[k].lower, problem.parameters[k].upper);
        }
        base[p] = low;
        designs.push_back(base);
        base[p] = high;
        designs.push_back(std::move(base));
    }

    std::vector<Outcome> outcomes;
    try {
        outcomes = session.evaluate(designs, Tag::Intervention);
    } catch (const EvaluationAborted& e) {
        std::cerr << "warning: intervention on " << link.param << " -> " << link.objective << " aborted: " << e.what()
                  << '\n';
        out.note = "intervention failed";
        return out;
    }
    std::vector<double> low_arm;
    std::vector<double> high_arm;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].ok) {
            std::cerr << "warning: intervention on " << link.param << " -> " << link.objective
                      << " lost a simulation; link left as candidate\n";
            out.note = "intervention failed";
            return out;
        }
        (i % 2 == 0 ? low_arm : high_arm).push_back(outcomes[i].objectives[o]);
    }

    const auto test = welch_t_test(high_arm, low_arm);
    out.evidence.intervened = true;
    out.evidence.intervention_p = test.p;
    if (test.p < alpha) {
        const auto obs = data.objective_column(o);
        const auto [lo_it, hi_it] = std::minmax_element(obs.begin(), obs.end());
        const double range = *hi_it - *lo_it;
        const double diff = std::accumulate(high_arm.begin(), high_arm.end(), 0.0) / static_cast<double>(n_per_arm)
                            - std::accumulate(low_arm.begin(), low_arm.end(), 0.0) / static_cast<double>(n_per_arm);
        out.status = LinkStatus::Confirmed;
        out.confidence = 1.0;
        out.effect = range > 0.0 ? std::clamp(diff / range, -1.0, 1.0) : (diff > 0.0 ? 1.0 : -1.0);
        out.note.clear();
    } else {
        out.status = LinkStatus::Rejected;
        out.confidence = 0.0;
        out.effect = 0.0;
        out.note = "not significant";
    }
    out.strength = std::abs(out.effect);
    return out;
}

auto discover(const Dataset& data, EvaluationSession& session, const DiscoveryConfig& config) -> CausalGraph
{
    CausalGraph graph;
    graph.links = observational_links(data, config);

    std::vector<std::size_t> uncertain;
    for (std::size_t i = 0; i < graph.links.size(); ++i) {
        const double c = graph.links[i].confidence;
        if (c > config.band_low && c < config.band_high) { uncertain.push_back(i); }
    }
    std::stable_sort(uncertain.begin(), uncertain.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(graph.links[a].evidence.pearson_r) > std::abs(graph.links[b].evidence.pearson_r);
    });

    const std::uint64_t cost = 2 * static_cast<std::uint64_t>(config.n_per_arm);
    for (auto i : uncertain) {
        if (graph.budget_used + cost > config.intervention_budget) { break; }
        auto& link = graph.links[i];
        Rng rng = substream(config.seed, "intervene/" + link.param + "/" + link.objective);
        const auto before = session.evaluations();
        link = intervene(link, data, session, config.n_per_arm, config.alpha, rng);
        graph.budget_used += session.evaluations() - before;
    }
    return graph;
}

} // namespace cadro
