#include "cadro/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cadro {

auto to_string(Direction d) -> std::string_view
{
    return d == Direction::Minimize ? "minimize" : "maximize";
}

auto to_string(Tag t) -> std::string_view
{
    switch (t) {
    case Tag::Exploration: return "exploration";
    case Tag::Intervention: return "intervention";
    case Tag::Focused: return "focused";
    }
    return "exploration";
}

auto parse_direction(std::string_view s) -> Direction
{
    if (s == "minimize" || s == "min") { return Direction::Minimize; }
    if (s == "maximize" || s == "max") { return Direction::Maximize; }
    throw ConfigError("unknown objective direction '" + std::string(s) + "'");
}

auto parse_tag(std::string_view s) -> Tag
{
    if (s == "exploration") { return Tag::Exploration; }
    if (s == "intervention") { return Tag::Intervention; }
    if (s == "focused") { return Tag::Focused; }
    throw ConfigError("unknown evaluation tag '" + std::string(s) + "'");
}

void ProblemDefinition::validate() const
{
    if (parameters.size() < 2) { throw ConfigError("a problem needs at least 2 parameters"); }
    if (objectives.size() < 2) { throw ConfigError("a problem needs at least 2 objectives"); }
    std::set<std::string> seen;
    for (const auto& p : parameters) {
        if (p.name.empty()) { throw ConfigError("parameter with empty name"); }
        if (!seen.insert(p.name).second) { throw ConfigError("duplicate parameter name '" + p.name + "'"); }
        if (!(std::isfinite(p.lower) && std::isfinite(p.upper) && p.lower < p.upper)) {
            throw ConfigError("parameter '" + p.name + "' needs finite bounds with lower < upper");
        }
    }
    seen.clear();
    for (const auto& o : objectives) {
        if (o.name.empty()) { throw ConfigError("objective with empty name"); }
        if (!seen.insert(o.name).second) { throw ConfigError("duplicate objective name '" + o.name + "'"); }
    }
    if (const auto* ext = std::get_if<ExternalBinding>(&evaluator)) {
        if (ext->command.empty()) { throw ConfigError("external evaluator needs a command"); }
        if (!(ext->timeout_s > 0.0)) { throw ConfigError("external evaluator timeout must be positive"); }
    }
}

auto ProblemDefinition::parameter_index(std::string_view name) const -> std::size_t
{
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        if (parameters[i].name == name) { return i; }
    }
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

auto ProblemDefinition::objective_index(std::string_view name) const -> std::size_t
{
    for (std::size_t i = 0; i < objectives.size(); ++i) {
        if (objectives[i].name == name) { return i; }
    }
    throw ConfigError("unknown objective '" + std::string(name) + "'");
}

auto ProblemDefinition::parameter_names() const -> std::vector<std::string>
{
    std::vector<std::string> names;
    names.reserve(parameters.size());
    for (const auto& p : parameters) { names.push_back(p.name); }
    return names;
}

auto ProblemDefinition::objective_names() const -> std::vector<std::string>
{
    std::vector<std::string> names;
    names.reserve(objectives.size());
    for (const auto& o : objectives) { names.push_back(o.name); }
    return names;
}

auto ProblemDefinition::within_bounds(std::span<const double> params) const -> bool
{
    if (params.size() != parameters.size()) { return false; }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!(params[i] >= parameters[i].lower && params[i] <= parameters[i].upper)) { return false; }
    }
    return true;
}

Dataset::Dataset(ProblemDefinition problem)
    : problem_(std::move(problem))
{
}

void Dataset::append(EvaluatedDesign row)
{
    if (row.params.size() != problem_.dimension()) { throw Error("dataset row has wrong parameter count"); }
    if (row.objectives.size() != problem_.objective_count()) { throw Error("dataset row has wrong objective count"); }
    if (!problem_.within_bounds(row.params)) { throw Error("dataset row outside parameter bounds"); }
    if (!std::all_of(row.objectives.begin(), row.objectives.end(), [](double v) { return std::isfinite(v); })) {
        throw Error("dataset row has non-finite objectives");
    }
    if (!rows_.empty() && row.eval_index <= rows_.back().eval_index) {
        throw Error("dataset eval_index must be strictly increasing");
    }
    rows_.push_back(std::move(row));
}

auto Dataset::filter(Tag tag) const -> Dataset
{
    Dataset out(problem_);
    for (const auto& r : rows_) {
        if (r.tag == tag) { out.rows_.push_back(r); }
    }
    return out;
}

auto Dataset::param_column(std::size_t p) const -> std::vector<double>
{
    std::vector<double> col;
    col.reserve(rows_.size());
    for (const auto& r : rows_) { col.push_back(r.params[p]); }
    return col;
}

auto Dataset::objective_column(std::size_t o) const -> std::vector<double>
{
    std::vector<double> col;
    col.reserve(rows_.size());
    for (const auto& r : rows_) { col.push_back(r.objectives[o]); }
    return col;
}

auto to_minimization(std::span<const double> objectives, const ProblemDefinition& problem) -> std::vector<double>
{
    if (objectives.size() != problem.objective_count()) { throw Error("objective vector length mismatch"); }
    std::vector<double> out(objectives.begin(), objectives.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (problem.objectives[j].direction == Direction::Maximize) { out[j] = -out[j]; }
    }
    return out;
}

auto normalize_points(std::span<const std::vector<double>> points) -> std::vector<std::vector<double>>
{
    if (points.empty()) { throw Error("empty set"); }
    const auto m = points.front().size();
    std::vector<double> lo(m, std::numeric_limits<double>::infinity());
    std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
    for (const auto& p : points) {
        if (p.size() != m) { throw Error("objective vector length mismatch"); }
        for (std::size_t j = 0; j < m; ++j) {
            lo[j] = std::min(lo[j], p[j]);
            hi[j] = std::max(hi[j], p[j]);
        }
    }
    std::vector<std::vector<double>> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        std::vector<double> q(m);
        for (std::size_t j = 0; j < m; ++j) {
            const double span = hi[j] - lo[j];
            q[j] = span > 0.0 ? (p[j] - lo[j]) / span : 0.0;
        }
        out.push_back(std::move(q));
    }
    return out;
}

auto normalize_objectives(std::span<const EvaluatedDesign> rows, const ProblemDefinition& problem)
    -> std::vector<std::vector<double>>
{
    if (rows.empty()) { throw Error("empty set"); }
    std::vector<std::vector<double>> mins;
    mins.reserve(rows.size());
    for (const auto& r : rows) { mins.push_back(to_minimization(r.objectives, problem)); }
    return normalize_points(mins);
}

auto dominates(std::span<const double> a, std::span<const double> b) -> bool
{
    if (a.size() != b.size()) { throw Error("dominance check on vectors of different length"); }
    bool strictly = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) { return false; }
        if (a[i] < b[i]) { strictly = true; }
    }
    return strictly;
}

// --- persistence ---------------------------------------------------------

void to_json(nlohmann::json& j, const ProblemDefinition& p)
{
    auto params = nlohmann::json::array();
    for (const auto& s : p.parameters) {
        params.push_back({{"name", s.name}, {"lower", s.lower}, {"upper", s.upper}});
    }
    auto objs = nlohmann::json::array();
    for (const auto& o : p.objectives) {
        objs.push_back({{"name", o.name}, {"direction", to_string(o.direction)}});
    }
    nlohmann::json ev;
    if (const auto* b = std::get_if<BuiltinBinding>(&p.evaluator)) {
        ev = {{"builtin", b->name}, {"options", b->options}};
    } else {
        const auto& e = std::get<ExternalBinding>(p.evaluator);
        ev = {{"command", e.command}, {"timeout_s", e.timeout_s}};
    }
    j = {{"parameters", params}, {"objectives", objs}, {"evaluator", ev}};
}

void from_json(const nlohmann::json& j, ProblemDefinition& p)
{
    try {
        p = ProblemDefinition{};
        for (const auto& s : j.at("parameters")) {
            p.parameters.push_back({s.at("name").get<std::string>(), s.at("lower").get<double>(),
                                    s.at("upper").get<double>()});
        }
        for (const auto& o : j.at("objectives")) {
            p.objectives.push_back({o.at("name").get<std::string>(),
                                    parse_direction(o.value("direction", std::string("minimize")))});
        }
        const auto& ev = j.at("evaluator");
        if (ev.contains("builtin")) {
            p.evaluator = BuiltinBinding{ev.at("builtin").get<std::string>(),
                                         ev.value("options", nlohmann::json::object())};
        } else {
            ExternalBinding ext;
            if (ev.at("command").is_string()) {
                ext.command = {ev.at("command").get<std::string>()};
            } else {
                ext.command = ev.at("command").get<std::vector<std::string>>();
            }
            ext.timeout_s = ev.value("timeout_s", 60.0);
            p.evaluator = std::move(ext);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed problem definition: ") + e.what());
    }
    p.validate();
}

auto format_double(double v) -> std::string
{
    char buf[64];
    auto res = std::to_chars(std::begin(buf), std::end(buf), v);
    return {buf, res.ptr};
}

auto parse_double(std::string_view s) -> double
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) { s.remove_prefix(1); }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) { s.remove_suffix(1); }
    if (!s.empty() && s.front() == '+') { s.remove_prefix(1); }
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error("cannot parse number '" + std::string(s) + "'");
    }
    return v;
}

namespace {

auto split_csv_line(const std::string& line) -> std::vector<std::string>
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') { cell.pop_back(); }
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') { cells.emplace_back(); }
    return cells;
}

} // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data)
{
    const auto& problem = data.problem();
    out << "eval_index,tag";
    for (const auto& p : problem.parameters) { out << ',' << p.name; }
    for (const auto& o : problem.objectives) { out << ',' << o.name; }
    out << '\n';
    for (const auto& r : data.rows()) {
        out << r.eval_index << ',' << to_string(r.tag);
        for (double v : r.params) { out << ',' << format_double(v); }
        for (double v : r.objectives) { out << ',' << format_double(v); }
        out << '\n';
    }
}

auto read_dataset_csv(std::istream& in, const ProblemDefinition& problem) -> Dataset
{
    std::string line;
    if (!std::getline(in, line)) { throw Error("dataset CSV is empty"); }
    auto header = split_csv_line(line);
    std::vector<std::string> expected{"eval_index", "tag"};
    for (const auto& p : problem.parameters) { expected.push_back(p.name); }
    for (const auto& o : problem.objectives) { expected.push_back(o.name); }
    if (header != expected) { throw Error("dataset CSV header does not match the problem"); }

    Dataset data(problem);
    const auto d = problem.dimension();
    const auto m = problem.objective_count();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") { continue; }
        auto cells = split_csv_line(line);
        if (cells.size() != expected.size()) {
            throw Error("dataset CSV line " + std::to_string(line_no) + " has wrong column count");
        }
        EvaluatedDesign row;
        const auto& idx = cells[0];
        const auto [end, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), row.eval_index);
        if (ec != std::errc() || end != idx.data() + idx.size()) {
            throw Error("dataset CSV line " + std::to_string(line_no) + " has a bad eval_index");
        }
        row.tag = parse_tag(cells[1]);
        row.params.resize(d);
        row.objectives.resize(m);
        for (std::size_t i = 0; i < d; ++i) { row.params[i] = parse_double(cells[2 + i]); }
        for (std::size_t j = 0; j < m; ++j) { row.objectives[j] = parse_double(cells[2 + d + j]); }
        data.append(std::move(row));
    }
    return data;
}

void save_dataset_csv(const std::string& path, const Dataset& data)
{
    std::ofstream out(path);
    if (!out) { throw Error("cannot write " + path); }
    write_dataset_csv(out, data);
}

auto load_dataset_csv(const std::string& path, const ProblemDefinition& problem) -> Dataset
{
    std::ifstream in(path);
    if (!in) { throw Error("cannot read " + path); }
    return read_dataset_csv(in, problem);
}

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> known, std::string_view what)
{
    if (!j.is_object()) { throw ConfigError(std::string(what) + " must be an object"); }
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown " + std::string(what) + " key '" + key + "'");
        }
    }
}

auto load_json_file(const std::string& path) -> nlohmann::json
{
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot read " + path); }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out) { throw Error("cannot write " + path); }
    out << j.dump(2) << '\n';
}

} // namespace cadro
