#pragma once

#include "apxtune/config.hpp"
#include "apxtune/core.hpp"
#include "apxtune/dataset.hpp"

#include <string>
#include <vector>

namespace apxtune {

struct CommandResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output; // stdout and stderr, interleaved
};

// Runs `command` under /bin/sh with a wall-clock timeout; the whole process
// group is killed on expiry.
CommandResult run_command(const std::string& command, double timeout_s);

struct RunFailure {
    std::string input_id;
    KnobSetting setting;
    std::string reason;
    std::string output;
};

struct HarnessOutcome {
    Dataset dataset; // resumed + fresh records
    std::vector<RunFailure> failures;
    std::size_t launched = 0; // subprocesses actually spawned
    std::size_t skipped = 0;  // (input, setting) pairs already present
};

// Expands the command template for one run; throws a config error for
// unknown placeholders or knobs never referenced.
std::string expand_command(const HarnessSpec& harness, const KnobSpace& space, const InputSpec& input,
                           const KnobSetting& setting);

// Profiles every (input, setting) pair not already present in resume_from.
// Each pair yields either one record (repeats averaged) or one failure.
// workers > 1 runs subprocesses concurrently; results do not depend on the
// schedule.
HarnessOutcome run_external(const HarnessSpec& harness, const KnobSpace& space, const std::vector<InputSpec>& inputs,
                            const std::vector<KnobSetting>& settings, const std::vector<std::string>& feature_names,
                            const Dataset* resume_from, int workers);

} // namespace apxtune
