#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace aove {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inconsistent shapes (structural problem, not a modelling one).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Parameters violate a model invariant (stationarity, invertibility, PD).
class ValidationError : public Error {
public:
    using Error::Error;
};

// A linear system that must be solved is (near) singular.
class NumericalError : public Error {
public:
    using Error::Error;
};

// Prediction-error covariance not positive definite even after jitter.
class DegenerateModelError : public NumericalError {
public:
    DegenerateModelError(std::size_t t, const std::string& what)
        : NumericalError(what), time_index_(t) {}

    std::size_t time_index() const noexcept { return time_index_; }

private:
    std::size_t time_index_;
};

// Too little data, unparseable input, missing series.
class DataError : public Error {
public:
    using Error::Error;
};

class MissingTickerError : public DataError {
public:
    explicit MissingTickerError(const std::string& ticker)
        : DataError("ticker not found: " + ticker), ticker_(ticker) {}

    const std::string& ticker() const noexcept { return ticker_; }

private:
    std::string ticker_;
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class EmptyIntersectionError : public DataError {
public:
    using DataError::DataError;
};

// Object used before it was fitted or prepared.
class StateError : public Error {
public:
    using Error::Error;
};

// Configuration schema violations. Carries every problem found, not just the first.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out;
        for (const auto& s : items) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
    std::vector<std::string> problems_;
};

}  // namespace aove
