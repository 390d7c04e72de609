#ifndef QISD_ERRORS_HPP
#define QISD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qisd {

enum class ErrorCategory {
    invalid_parameter,
    grid_mismatch,
    out_of_range,
    not_positive_semidefinite,
    singular_jacobian,
    divergence,
    conditioning,
    step_size,
    config,
    io,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), category_(cat) {}
    ErrorCategory category() const noexcept { return category_; }

  private:
    ErrorCategory category_;
};

struct InvalidParameterError : Error {
    explicit InvalidParameterError(const std::string& msg)
        : Error(ErrorCategory::invalid_parameter, msg) {}
};

struct GridMismatchError : Error {
    explicit GridMismatchError(const std::string& msg)
        : Error(ErrorCategory::grid_mismatch, msg) {}
};

struct OutOfRangeError : Error {
    explicit OutOfRangeError(const std::string& msg)
        : Error(ErrorCategory::out_of_range, msg) {}
};

struct NotPositiveSemidefiniteError : Error {
    NotPositiveSemidefiniteError(const std::string& msg, double most_negative_eigenvalue)
        : Error(ErrorCategory::not_positive_semidefinite, msg),
          most_negative_eigenvalue(most_negative_eigenvalue) {}
    double most_negative_eigenvalue;
};

struct SingularJacobianError : Error {
    SingularJacobianError(const std::string& msg, std::size_t time_index)
        : Error(ErrorCategory::singular_jacobian, msg), time_index(time_index) {}
    std::size_t time_index;
};

struct DivergenceError : Error {
    DivergenceError(const std::string& msg, std::size_t time_index)
        : Error(ErrorCategory::divergence, msg), time_index(time_index) {}
    std::size_t time_index;
};

struct ConditioningError : Error {
    explicit ConditioningError(const std::string& msg)
        : Error(ErrorCategory::conditioning, msg) {}
};

struct StepSizeError : Error {
    explicit StepSizeError(const std::string& msg)
        : Error(ErrorCategory::step_size, msg) {}
};

struct ConfigError : Error {
    ConfigError(const std::string& msg, int line = -1)
        : Error(ErrorCategory::config, msg), line(line) {}
    int line;
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(ErrorCategory::io, msg) {}
};

// Process exit codes used by the command-line driver.
inline int exit_code_for(ErrorCategory cat) {
    switch (cat) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::invalid_parameter:
        case ErrorCategory::grid_mismatch:
        case ErrorCategory::out_of_range: return 3;
        case ErrorCategory::not_positive_semidefinite:
        case ErrorCategory::singular_jacobian:
        case ErrorCategory::divergence:
        case ErrorCategory::conditioning:
        case ErrorCategory::step_size: return 4;
        case ErrorCategory::io: return 5;
    }
    return 1;
}

} // namespace qisd

#endif
