#include "cadro/session.hpp"

#include <cstring>

namespace cadro {

auto BudgetBreakdown::operator[](Tag t) -> std::uint64_t&
{
    switch (t) {
    case Tag::Exploration: return exploration;
    case Tag::Intervention: return intervention;
    case Tag::Focused: return focused;
    }
    return exploration;
}

namespace {

auto memo_key(std::span<const double> params) -> std::string
{
    std::string key(params.size() * sizeof(double), '\0');
    std::memcpy(key.data(), params.data(), key.size());
    return key;
}

} // namespace

EvaluationSession::EvaluationSession(ProblemDefinition problem, Evaluator& evaluator)
    : evaluator_(&evaluator)
    , dataset_(std::move(problem))
{
}

auto EvaluationSession::evaluate(std::span<const std::vector<double>> params, Tag tag) -> std::vector<Outcome>
{
    const auto& prob = dataset_.problem();
    std::vector<Outcome> out(params.size());
    std::vector<EvaluationRequest> requests;
    std::vector<std::size_t> request_slot; // inputs needing a fresh result
    std::vector<std::size_t> first_slot;   // per request: input that created it
    std::unordered_map<std::string, std::size_t> in_batch; // key -> request position

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!prob.within_bounds(params[i])) { throw Error("design outside parameter bounds"); }
        auto key = memo_key(params[i]);
        if (auto it = memo_.find(key); it != memo_.end()) {
            const auto& row = dataset_.rows()[it->second];
            out[i] = {true, row.objectives, row.eval_index, true};
            continue;
        }
        if (auto it = in_batch.find(key); it != in_batch.end()) {
            request_slot.push_back(i); // duplicate inside the batch, resolved below
            continue;
        }
        in_batch.emplace(std::move(key), requests.size());
        requests.push_back({counter_ + requests.size(), params[i]});
        first_slot.push_back(i);
        request_slot.push_back(i);
    }

    counter_ += requests.size();
    budget_[tag] += requests.size();
    auto results = evaluator_->evaluate_batch(requests);

    for (std::size_t r = 0; r < requests.size(); ++r) {
        auto& res = results[r];
        if (res.status != EvalStatus::Ok) { continue; }
        EvaluatedDesign row{requests[r].params, res.objectives, tag, requests[r].id};
        dataset_.append(row);
        memo_.emplace(memo_key(row.params), dataset_.size() - 1);
    }

    for (std::size_t i : request_slot) {
        const auto r = in_batch.at(memo_key(params[i]));
        const auto& res = results[r];
        out[i].eval_index = requests[r].id;
        out[i].ok = res.status == EvalStatus::Ok;
        out[i].cached = first_slot[r] != i;
        if (out[i].ok) { out[i].objectives = res.objectives; }
    }
    return out;
}

void EvaluationSession::restore(const Dataset& data, const BudgetBreakdown& budget)
{
    if (counter_ != 0) { throw Error("cannot restore into a session that already evaluated designs"); }
    if (!data.empty() && data.rows().back().eval_index >= budget.total()) {
        throw Error("restored budget is smaller than the dataset's eval_index range");
    }
    for (const auto& row : data.rows()) {
        dataset_.append(row);
        memo_.emplace(memo_key(row.params), dataset_.size() - 1);
    }
    counter_ = budget.total();
    budget_ = budget;
}

} // namespace cadro
