#pragma once

#include <stdexcept>
#include <string>

namespace ghostrec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A scalar argument or spec field is out of its valid range.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Array shapes or grids that must agree do not.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The simulation grid cannot hold the source without wraparound.
class GridTooSmall : public Error {
public:
    using Error::Error;
};

/// A propagator was asked to run outside its sampling-validity range.
class SamplingViolation : public Error {
public:
    SamplingViolation(const std::string& what, double critical_distance)
        : Error(what), critical_distance_(critical_distance) {}

    [[nodiscard]] double critical_distance() const noexcept { return critical_distance_; }

private:
    double critical_distance_;
};

/// Statistical estimator preconditions failed (too few samples, no peak, ...).
class EstimationError : public Error {
public:
    using Error::Error;
};

/// The solver hit a non-finite objective.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed config text; carries the 1-based line number.
class ConfigParseError : public Error {
public:
    ConfigParseError(const std::string& what, int line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

/// Config parsed but a value is invalid; names the offending key.
class ConfigValidationError : public Error {
public:
    ConfigValidationError(const std::string& key, const std::string& what)
        : Error(key + ": " + what), key_(key) {}

    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Reading or writing a persisted artifact failed.
class IoError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; wraps the underlying error and names the stage.
class PipelineError : public Error {
public:
    PipelineError(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage) {}

    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace ghostrec
