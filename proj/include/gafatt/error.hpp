#ifndef GAFATT_ERROR_HPP
#define GAFATT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gafatt {

enum class ErrorCategory {
    invalid_transcript,
    schema,
    bounds,
    load,
    config,
    partition,
    encode,
    shape,
    evaluation,
    harness,
    argument,
    io,
    check,
};

inline const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::invalid_transcript: return "invalid-transcript";
        case ErrorCategory::schema: return "schema";
        case ErrorCategory::bounds: return "bounds";
        case ErrorCategory::load: return "load";
        case ErrorCategory::config: return "config";
        case ErrorCategory::partition: return "partition";
        case ErrorCategory::encode: return "encode";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::evaluation: return "evaluation";
        case ErrorCategory::harness: return "harness";
        case ErrorCategory::argument: return "argument";
        case ErrorCategory::io: return "io";
        case ErrorCategory::check: return "check";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }
    const char* category_name() const noexcept { return to_string(category_); }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

}  // namespace gafatt

#endif  // GAFATT_ERROR_HPP
