#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cadro/forest.hpp"
#include "cadro/problem.hpp"
#include "cadro/rng.hpp"
#include "cadro/session.hpp"

namespace cadro {

enum class LinkStatus { Candidate, Confirmed, Rejected };

auto to_string(LinkStatus s) -> std::string_view;
auto parse_link_status(std::string_view s) -> LinkStatus;

struct Evidence {
    double pearson_r{0.0};
    double pearson_p{1.0};
    double rf_importance{0.0};
    double mutual_info_norm{0.0};
    bool intervened{false};
    std::optional<double> intervention_p;
};

/// Parameter -> objective edge of the causal graph.
///
/// `effect` is the signed, range-normalized effect size, `confidence` the
/// belief in the edge and `strength` = |effect|.
struct CausalLink {
    std::string param;
    std::string objective;
    double effect{0.0};
    double confidence{0.0};
    double strength{0.0};
    Evidence evidence;
    LinkStatus status{LinkStatus::Candidate};
    std::string note;
};

struct CausalGraph {
    std::vector<CausalLink> links; // objective-major within parameter order
    std::uint64_t budget_used{0};

    [[nodiscard]] auto link(std::string_view param, std::string_view objective) const -> const CausalLink&;
};

void to_json(nlohmann::json& j, const CausalLink& l);
void from_json(const nlohmann::json& j, CausalLink& l);
void to_json(nlohmann::json& j, const CausalGraph& g);
void from_json(const nlohmann::json& j, CausalGraph& g);

/// `param,objective,strength,confidence,status` rows for plotting.
void write_strengths_csv(std::ostream& out, const CausalGraph& graph);

struct DiscoveryConfig {
    std::size_t mi_bins{8};
    ForestConfig forest;
    std::size_t n_per_arm{30};
    double alpha{0.05};
    double band_low{0.2};
    double band_high{0.8};
    std::uint64_t intervention_budget{0};
    std::uint64_t seed{0};
};

void to_json(nlohmann::json& j, const DiscoveryConfig& c);
void from_json(const nlohmann::json& j, DiscoveryConfig& c);

/// Synthesized observational confidence in [0, 0.9]:
/// 0.5 (1 - p), +0.2 when the forest gives more than the uniform share 1/d,
/// +0.2 when normalized MI exceeds 0.1.
auto observational_confidence(const Evidence& evidence, std::size_t parameter_count) -> double;

/// Evidence and observational confidence for every (parameter, objective)
/// pair, with effect initialized to the signed Pearson r. Pairs are processed
/// in parallel.
auto observational_links(const Dataset& data, const DiscoveryConfig& config) -> std::vector<CausalLink>;

/// Low/high-arm interventional test of a Candidate link.
///
/// The parameter is pinned at its 25th and 75th dataset percentiles while the
/// other coordinates of design i are shared uniform draws in both arms. A
/// Welch test at `alpha` confirms (confidence 1, range-normalized effect) or
/// rejects (confidence 0, effect 0) the link. Failed simulations leave the
/// link Candidate.
auto intervene(const CausalLink& link, const Dataset& data, EvaluationSession& session, std::size_t n_per_arm,
               double alpha, Rng& rng) -> CausalLink;

/// Observational ensemble followed by interventions on the links whose
/// confidence lies inside the uncertainty band, largest |r| first, while the
/// intervention budget lasts.
auto discover(const Dataset& data, EvaluationSession& session, const DiscoveryConfig& config) -> CausalGraph;

namespace serial {

auto observational_links(const Dataset& data, const DiscoveryConfig& config) -> std::vector<CausalLink>;

} // namespace serial

} // namespace cadro
