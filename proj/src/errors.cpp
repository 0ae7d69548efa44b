#include "sfc/errors.hpp"

namespace sfc {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::ChartCut: return "chart-cut error";
        case ErrorKind::NotOnSection: return "not-on-section error";
        case ErrorKind::DegenerateRadius: return "degenerate-radius error";
        case ErrorKind::Undersampling: return "undersampling error";
        case ErrorKind::Parameter: return "parameter error";
        case ErrorKind::FieldEvaluation: return "field-evaluation error";
        case ErrorKind::Spectrum: return "spectrum error";
        case ErrorKind::Stiffness: return "stiffness error";
        case ErrorKind::Blowup: return "blowup error";
        case ErrorKind::Initialization: return "initialization error";
        case ErrorKind::EscapeFailure: return "escape-failure error";
        case ErrorKind::OutOfDomain: return "out-of-domain error";
        case ErrorKind::OuterExcursion: return "outer-excursion error";
        case ErrorKind::CalibrationFailure: return "calibration-failure error";
        case ErrorKind::CalibrationInfeasible: return "calibration-infeasible error";
        case ErrorKind::PrecisionInfeasible: return "precision-infeasible error";
        case ErrorKind::GapFailure: return "gap-failure error";
        case ErrorKind::Resolution: return "resolution error";
        case ErrorKind::RefinementInconsistency: return "refinement-inconsistency error";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

}  // namespace sfc
