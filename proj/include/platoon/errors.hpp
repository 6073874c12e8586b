#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace platoon {

/// Offending-field tag carried by a ValidationError.
enum class Field { P, Q, Kappa, Beta, Threshold, Horizon, XMax, Margin, Tol, Slots, Replications, Confidence, Other };

inline const char* field_name(Field f) {
    switch (f) {
        case Field::P: return "p";
        case Field::Q: return "q";
        case Field::Kappa: return "kappa";
        case Field::Beta: return "beta";
        case Field::Threshold: return "m";
        case Field::Horizon: return "horizon";
        case Field::XMax: return "x_max";
        case Field::Margin: return "margin";
        case Field::Tol: return "tol";
        case Field::Slots: return "slots";
        case Field::Replications: return "reps";
        case Field::Confidence: return "confidence";
        case Field::Other: break;
    }
    return "input";
}

/// Bad input. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(Field field, const std::string& what)
        : std::invalid_argument(std::string(field_name(field)) + ": " + what), field_(field) {}
    Field field() const noexcept { return field_; }

private:
    Field field_;
};

/// Action outside its domain, e.g. dispatching from an empty queue.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Numerical failure (non-convergence, singular system, search cap). Maps to exit code 3.
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public ComputationError {
public:
    ConvergenceError(const std::string& what, double residual, long sweeps)
        : ComputationError(what), residual_(residual), sweeps_(sweeps) {}
    double residual() const noexcept { return residual_; }
    long sweeps() const noexcept { return sweeps_; }

private:
    double residual_;
    long sweeps_;
};

/// The threshold search hit its cap before the cost curve turned upward.
class SearchCapExceeded : public ComputationError {
public:
    SearchCapExceeded(const std::string& what, std::vector<double> curve)
        : ComputationError(what), curve_(std::move(curve)) {}
    const std::vector<double>& curve() const noexcept { return curve_; }

private:
    std::vector<double> curve_;
};

} // namespace platoon
