#include <chrono>
#include <cerrno>
#include <cstring>
#include <iostream>
#include <unordered_map>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cadro/evaluators.hpp"

namespace cadro {

ExternalEvaluator::ExternalEvaluator(ProblemDefinition problem, ExternalBinding binding)
    : problem_(std::move(problem))
    , binding_(std::move(binding))
{
    if (binding_.command.empty()) { throw ConfigError("external evaluator needs a command"); }
}

ExternalEvaluator::~ExternalEvaluator()
{
    terminate();
}

void ExternalEvaluator::spawn()
{
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, sv) != 0) {
        throw Error(std::string("socketpair failed: ") + std::strerror(errno));
    }
    // argv: command[0] <problem-json> command[1..]
    const std::string problem_json = nlohmann::json(problem_).dump();
    std::vector<std::string> args;
    args.push_back(binding_.command[0]);
    args.push_back(problem_json);
    args.insert(args.end(), binding_.command.begin() + 1, binding_.command.end());
    std::vector<char*> argv;
    for (auto& a : args) { argv.push_back(a.data()); }
    argv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw Error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::close(sv[0]);
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::close(sv[1]);
        ::execvp(argv[0], argv.data());
        std::_Exit(127);
    }
    ::close(sv[1]);
    pid_ = pid;
    to_child_ = sv[0];
    from_child_ = sv[0];
    pending_.clear();
}

void ExternalEvaluator::terminate()
{
    if (to_child_ >= 0) {
        ::close(to_child_);
        to_child_ = -1;
        from_child_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        // Closing the socket gives a well-behaved child EOF; give it a moment.
        for (int i = 0; i < 50; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            ::usleep(2000);
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

namespace {

auto encode_request(const EvaluationRequest& req, const ProblemDefinition& problem) -> std::string
{
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < problem.dimension(); ++i) { params[problem.parameters[i].name] = req.params[i]; }
    nlohmann::json line = {{"id", req.id}, {"params", params}};
    return line.dump() + "\n";
}

} // namespace

auto ExternalEvaluator::do_evaluate(std::span<const EvaluationRequest> requests) -> std::vector<EvaluationResult>
{
    std::vector<EvaluationResult> results;
    if (requests.empty()) { return results; }
    if (pid_ < 0) { spawn(); }

    std::string outbox;
    std::unordered_map<std::uint64_t, bool> waiting;
    for (const auto& r : requests) {
        outbox += encode_request(r, problem_);
        waiting.emplace(r.id, true);
    }

    auto fail_remaining = [&](const std::string& why) {
        for (const auto& r : requests) {
            if (waiting.count(r.id) != 0) { results.push_back({r.id, {}, EvalStatus::Failed, why}); }
        }
        waiting.clear();
    };

    auto handle_line = [&](const std::string& line) {
        if (line.empty()) { return; }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            std::cerr << "warning: malformed evaluator reply ignored: " << line.substr(0, 120) << '\n';
            return;
        }
        if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_unsigned()) {
            std::cerr << "warning: evaluator reply without a valid id ignored\n";
            return;
        }
        const auto id = reply["id"].get<std::uint64_t>();
        if (waiting.erase(id) == 0) { return; }
        EvaluationResult res{id, {}, EvalStatus::Failed, {}};
        if (reply.contains("error")) {
            res.error = reply["error"].is_string() ? reply["error"].get<std::string>() : reply["error"].dump();
        } else if (reply.contains("objectives") && reply["objectives"].is_object()) {
            const auto& objs = reply["objectives"];
            res.objectives.reserve(problem_.objective_count());
            for (const auto& o : problem_.objectives) {
                auto it = objs.find(o.name);
                if (it == objs.end() || !it->is_number()) {
                    res.objectives.clear();
                    res.error = "reply lacks numeric objective '" + o.name + "'";
                    break;
                }
                res.objectives.push_back(it->get<double>());
            }
            if (res.error.empty()) { res.status = EvalStatus::Ok; }
        } else {
            res.error = "malformed reply";
        }
        results.push_back(std::move(res));
    };

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(binding_.timeout_s));
    std::size_t sent = 0;
    char buf[65536];
    while (!waiting.empty()) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
        if (left <= 0) {
            fail_remaining("timeout");
            terminate();
            break;
        }
        pollfd pfd{to_child_, static_cast<short>(POLLIN | (sent < outbox.size() ? POLLOUT : 0)), 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1000)));
        if (rc < 0) {
            if (errno == EINTR) { continue; }
            fail_remaining(std::string("poll failed: ") + std::strerror(errno));
            terminate();
            break;
        }
        if (rc == 0) { continue; }
        if ((pfd.revents & POLLOUT) != 0 && sent < outbox.size()) {
            const auto n = ::send(to_child_, outbox.data() + sent, outbox.size() - sent, MSG_DONTWAIT | MSG_NOSIGNAL);
            if (n > 0) {
                sent += static_cast<std::size_t>(n);
            } else if (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR) {
                fail_remaining("evaluator process closed its input");
                terminate();
                break;
            }
        }
        if ((pfd.revents & (POLLIN | POLLHUP | POLLERR)) != 0) {
            const auto n = ::recv(from_child_, buf, sizeof(buf), MSG_DONTWAIT);
            if (n > 0) {
                pending_.append(buf, static_cast<std::size_t>(n));
                std::size_t pos = 0;
                while ((pos = pending_.find('\n')) != std::string::npos) {
                    handle_line(pending_.substr(0, pos));
                    pending_.erase(0, pos + 1);
                }
            } else if (n == 0 || (errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR)) {
                fail_remaining("evaluator process exited");
                terminate();
                break;
            }
        }
    }
    return results;
}

} // namespace cadro
