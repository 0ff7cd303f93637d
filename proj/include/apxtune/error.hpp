#pragma once

#include <stdexcept>
#include <string>

namespace apxtune {

// Error categories map 1:1 onto the CLI's machine-parsable failure lines.
enum class ErrorCategory { usage, config, io, data, dependency, internal };

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg) : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const { return cat_; }

private:
    ErrorCategory cat_;
};

[[noreturn]] inline void fail(ErrorCategory cat, const std::string& msg) {
    throw Error(cat, msg);
}

} // namespace apxtune
