#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace revswitch {

// Every failure raised by the library derives from Error; kind() is the
// machine-readable tag the CLI puts into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error("invalid_argument", w) {}
};

struct OutOfRange : Error {
    explicit OutOfRange(const std::string& w) : Error("out_of_range", w) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error("domain", w) {}
};

struct UnsupportedError : Error {
    explicit UnsupportedError(const std::string& w) : Error("unsupported", w) {}
};

struct HypothesisViolation : Error {
    explicit HypothesisViolation(const std::string& w) : Error("hypothesis_violation", w) {}
};

struct BracketError : Error {
    explicit BracketError(const std::string& w) : Error("bracket", w) {}
};

struct AccuracyError : Error {
    explicit AccuracyError(const std::string& w) : Error("accuracy", w) {}
};

struct ResonanceError : Error {
    ResonanceError(const std::string& w, int wavenumber)
        : Error("resonance", w), wavenumber(wavenumber) {}
    int wavenumber;
};

struct SingularityError : Error {
    explicit SingularityError(const std::string& w) : Error("singularity", w) {}
};

struct ConfigError : Error {
    ConfigError(std::string field, const std::string& w)
        : Error("config", w), field(std::move(field)) {}
    std::string field;
};

/// Nonlinear solve failed; carries the residual norm of every iterate.
struct ConvergenceError : Error {
    ConvergenceError(const std::string& w, std::vector<double> history)
        : Error("no_convergence", w), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Time integration stopped; the last accepted state is kept for diagnostics.
struct IntegrationError : Error {
    IntegrationError(const std::string& w, double time, std::vector<double> state)
        : Error("integration_failure", w), last_time(time), last_state(std::move(state)) {}
    double last_time;
    std::vector<double> last_state;
};

/// Explicit step too large for the transport CFL bound.
struct StepRejected : Error {
    StepRejected(const std::string& w, double suggested_dt)
        : Error("step_rejected", w), suggested_dt(suggested_dt) {}
    double suggested_dt;
};

} // namespace revswitch
