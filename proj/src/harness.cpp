#include "apxtune/harness.hpp"

#include "apxtune/error.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <set>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace apxtune {

CommandResult run_command(const std::string& command, double timeout_s) {
    int pipefd[2];
    if (pipe(pipefd) != 0)
        fail(ErrorCategory::internal, "pipe() failed: " + std::string(std::strerror(errno)));

    const pid_t pid = fork();
    if (pid < 0) {
        close(pipefd[0]);
        close(pipefd[1]);
        fail(ErrorCategory::internal, "fork() failed: " + std::string(std::strerror(errno)));
    }
    if (pid == 0) {
        setpgid(0, 0); // own process group, so the timeout can kill children too
        dup2(pipefd[1], STDOUT_FILENO);
        dup2(pipefd[1], STDERR_FILENO);
        close(pipefd[0]);
        close(pipefd[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    close(pipefd[1]);
    CommandResult result;
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    bool alive = true;
    bool pipe_open = true;
    char buf[4096];

    while (alive || pipe_open) {
        if (pipe_open) {
            pollfd pfd{pipefd[0], POLLIN, 0};
            const int pr = poll(&pfd, 1, 50);
            if (pr > 0) {
                const ssize_t n = read(pipefd[0], buf, sizeof(buf));
                if (n > 0)
                    result.output.append(buf, static_cast<std::size_t>(n));
                else
                    pipe_open = false;
            }
        } else {
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (alive) {
            int status = 0;
            const pid_t done = waitpid(pid, &status, WNOHANG);
            if (done == pid) {
                alive = false;
                result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
            } else if (std::chrono::steady_clock::now() >= deadline) {
                kill(-pid, SIGKILL);
                kill(pid, SIGKILL);
                waitpid(pid, &status, 0);
                alive = false;
                result.timed_out = true;
                result.exit_code = -1;
            }
        }
    }
    close(pipefd[0]);
    return result;
}

std::string expand_command(const HarnessSpec& harness, const KnobSpace& space, const InputSpec& input,
                           const KnobSetting& setting) {
    const auto values = setting_values(space, setting);
    std::string out;
    const std::string& tpl = harness.command;
    std::vector<bool> used(space.arity(), false);
    bool used_input = false;

    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] != '{') {
            out += tpl[i++];
            continue;
        }
        const auto end = tpl.find('}', i);
        if (end == std::string::npos)
            fail(ErrorCategory::config, "harness command has an unterminated placeholder");
        const std::string name = tpl.substr(i + 1, end - i - 1);
        if (name == "input") {
            out += input.token;
            used_input = true;
        } else if (name.rfind("knob:", 0) == 0) {
            const std::string knob = name.substr(5);
            bool found = false;
            for (std::size_t k = 0; k < space.arity(); ++k) {
                if (space.knobs[k].name == knob) {
                    out += format_double(values[k]);
                    used[k] = true;
                    found = true;
                    break;
                }
            }
            if (!found)
                fail(ErrorCategory::config, "harness command references unknown knob '" + knob + "'");
        } else {
            fail(ErrorCategory::config, "harness command has unknown placeholder '{" + name + "}'");
        }
        i = end + 1;
    }
    if (!used_input)
        fail(ErrorCategory::config, "harness command never references {input}");
    for (std::size_t k = 0; k < space.arity(); ++k)
        if (!used[k])
            fail(ErrorCategory::config, "harness command never references knob '" + space.knobs[k].name + "'");
    return out;
}

namespace {

bool parse_prefixed(const std::string& output, const std::string& prefix, double& value) {
    bool found = false;
    std::size_t pos = 0;
    while (pos < output.size()) {
        auto eol = output.find('\n', pos);
        if (eol == std::string::npos)
            eol = output.size();
        const std::string_view line(output.data() + pos, eol - pos);
        if (line.size() > prefix.size() && line.substr(0, prefix.size()) == prefix) {
            std::string_view rest = line.substr(prefix.size());
            while (!rest.empty() && (rest.back() == '\r' || rest.back() == ' '))
                rest.remove_suffix(1);
            double v = 0.0;
            auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
            if (res.ec == std::errc{} && res.ptr == rest.data() + rest.size() && std::isfinite(v)) {
                value = v; // last well-formed line wins
                found = true;
            }
        }
        pos = eol + 1;
    }
    return found;
}

struct Job {
    std::size_t input_idx = 0;
    KnobSetting setting;
};

struct JobResult {
    bool ok = false;
    bool attempted = false;
    double distance = 0.0;
    double cost = 0.0;
    std::string reason;
    std::string output;
};

} // namespace

HarnessOutcome run_external(const HarnessSpec& harness, const KnobSpace& space, const std::vector<InputSpec>& inputs,
                            const std::vector<KnobSetting>& settings, const std::vector<std::string>& feature_names,
                            const Dataset* resume_from, int workers) {
    validate(space);
    if (inputs.empty())
        fail(ErrorCategory::config, "harness run has no inputs");
    if (settings.empty())
        fail(ErrorCategory::config, "harness run has no settings");
    for (const auto& in : inputs)
        if (in.features.size() != feature_names.size())
            fail(ErrorCategory::config, "input '" + in.id + "' declares " + std::to_string(in.features.size()) +
                                            " features, schema expects " + std::to_string(feature_names.size()));
    // Template errors should surface before any subprocess is spawned.
    (void)expand_command(harness, space, inputs.front(), settings.front());

    std::set<std::pair<std::string, std::size_t>> done;
    if (resume_from)
        for (const auto& r : resume_from->records)
            done.emplace(r.input_id, setting_rank(space, r.setting));

    HarnessOutcome outcome;
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        for (const auto& s : settings) {
            if (done.count({inputs[i].id, setting_rank(space, s)})) {
                ++outcome.skipped;
                continue;
            }
            jobs.push_back({i, s});
        }
    }

    std::vector<JobResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        while (true) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size())
                return;
            const Job& job = jobs[j];
            JobResult& res = results[j];
            res.attempted = true;
            double dist_sum = 0.0, cost_sum = 0.0;
            bool ok = true;
            for (int rep = 0; rep < harness.repeats && ok; ++rep) {
                const std::string cmd = expand_command(harness, space, inputs[job.input_idx], job.setting);
                const CommandResult run = run_command(cmd, harness.timeout_s);
                if (run.timed_out) {
                    res.reason = "timeout after " + format_double(harness.timeout_s) + "s";
                    ok = false;
                } else if (run.exit_code != 0) {
                    res.reason = "exit code " + std::to_string(run.exit_code);
                    res.output = run.output;
                    ok = false;
                } else {
                    double d = 0.0, c = 0.0;
                    if (!parse_prefixed(run.output, harness.distance_prefix, d)) {
                        res.reason = "no line with prefix '" + harness.distance_prefix + "'";
                        res.output = run.output;
                        ok = false;
                    } else if (!parse_prefixed(run.output, harness.cost_prefix, c)) {
                        res.reason = "no line with prefix '" + harness.cost_prefix + "'";
                        res.output = run.output;
                        ok = false;
                    } else if (!(c > 0.0) || d < 0.0) {
                        res.reason = "parsed invalid distance/cost (" + format_double(d) + ", " + format_double(c) + ")";
                        res.output = run.output;
                        ok = false;
                    } else {
                        dist_sum += d;
                        cost_sum += c;
                    }
                }
            }
            if (ok) {
                res.ok = true;
                res.distance = dist_sum / harness.repeats;
                res.cost = cost_sum / harness.repeats;
            }
        }
    };

    const std::size_t pool = workers > 0 ? static_cast<std::size_t>(workers)
                                         : std::max(1u, std::thread::hardware_concurrency());
    if (pool <= 1 || jobs.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < std::min(pool, jobs.size()); ++t)
            threads.emplace_back(worker);
        for (auto& t : threads)
            t.join();
    }
    outcome.launched = jobs.size();

    Dataset ds;
    ds.space = space;
    ds.feature_names = feature_names;
    if (resume_from)
        ds.records = resume_from->records;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const Job& job = jobs[j];
        const JobResult& res = results[j];
        if (!res.ok) {
            outcome.failures.push_back({inputs[job.input_idx].id, job.setting, res.reason, res.output});
            continue;
        }
        RunRecord r;
        r.input_id = inputs[job.input_idx].id;
        r.features.values = inputs[job.input_idx].features;
        r.setting = job.setting;
        r.distance = res.distance;
        r.cost = res.cost;
        ds.records.push_back(std::move(r));
    }
    finalize(ds);
    outcome.dataset = std::move(ds);
    return outcome;
}

} // namespace apxtune
