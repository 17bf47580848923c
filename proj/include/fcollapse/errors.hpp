#pragma once

#include <stdexcept>
#include <string>

namespace fcollapse {

// Malformed arguments, inconsistent dimensions, unknown names.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative method ran out of budget or produced an inconsistent answer.
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrix : public NumericFailure {
public:
    SingularMatrix(const std::string& what, double condition)
        : NumericFailure(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

// Covariance recursion did not settle within the wave budget.
class NoEquilibrium : public NumericFailure {
public:
    NoEquilibrium(const std::string& what, double last_change)
        : NumericFailure(what), last_change_(last_change) {}
    double last_change() const noexcept { return last_change_; }

private:
    double last_change_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& what, std::string path)
        : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace fcollapse
