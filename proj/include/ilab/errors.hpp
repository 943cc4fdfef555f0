#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ilab {

/// Input outside the domain of an operation (bad grid, negative energy, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Adaptive quadrature ran out of refinement budget before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::complex<double> last, std::complex<double> previous)
        : std::runtime_error(what), last_(last), previous_(previous) {}

    std::complex<double> last_estimate() const noexcept { return last_; }
    std::complex<double> previous_estimate() const noexcept { return previous_; }

private:
    std::complex<double> last_;
    std::complex<double> previous_;
};

/// |psi| fell below the node threshold; phase, velocity and Q are undefined there.
class NodeError : public std::runtime_error {
public:
    NodeError(const std::string& what, double x, double t) : std::runtime_error(what), x_(x), t_(t) {}

    double x() const noexcept { return x_; }
    double t() const noexcept { return t_; }

private:
    double x_;
    double t_;
};

/// The adaptive ODE step shrank below the admissible fraction of the time span.
class StepUnderflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A zero function cannot be normalized.
class NormalizationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Requested case has no supported evaluation path (e.g. closed-form norm for a sampled potential).
class UnsupportedCaseError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid scenario configuration. key() names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace ilab
