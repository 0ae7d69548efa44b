#pragma once

#include <stdexcept>
#include <string>

namespace sfc {

enum class ErrorKind {
    Domain,
    ChartCut,
    NotOnSection,
    DegenerateRadius,
    Undersampling,
    Parameter,
    FieldEvaluation,
    Spectrum,
    Stiffness,
    Blowup,
    Initialization,
    EscapeFailure,
    OutOfDomain,
    OuterExcursion,
    CalibrationFailure,
    CalibrationInfeasible,
    PrecisionInfeasible,
    GapFailure,
    Resolution,
    RefinementInconsistency,
    Config,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Usage/configuration problems as opposed to scientific failures.
    bool is_usage() const noexcept { return kind_ == ErrorKind::Config || kind_ == ErrorKind::Parameter; }

private:
    ErrorKind kind_;
};

}  // namespace sfc
