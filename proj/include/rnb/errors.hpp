#pragma once

#include <stdexcept>
#include <string>

namespace rnb {

enum class ErrorKind {
    QueryBeyondPresent,
    HistoryTooShort,
    NonMonotonicTime,
    ConstraintViolation,
    NoConvergence,
    DegenerateJacobian,
    InsufficientPrehistory,
    GradientUnavailable,
    ContextMismatch,
    NumericalNoise,
    WidthTooSmall,
    MissingArtifact,
    Validation
};

inline const char* error_name(ErrorKind k)
{
    switch (k) {
    case ErrorKind::QueryBeyondPresent: return "QueryBeyondPresent";
    case ErrorKind::HistoryTooShort: return "HistoryTooShort";
    case ErrorKind::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::DegenerateJacobian: return "DegenerateJacobian";
    case ErrorKind::InsufficientPrehistory: return "InsufficientPrehistory";
    case ErrorKind::GradientUnavailable: return "GradientUnavailable";
    case ErrorKind::ContextMismatch: return "ContextMismatch";
    case ErrorKind::NumericalNoise: return "NumericalNoise";
    case ErrorKind::WidthTooSmall: return "WidthTooSmall";
    case ErrorKind::MissingArtifact: return "MissingArtifact";
    case ErrorKind::Validation: return "Validation";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string(error_name(kind)) + ": " + msg), kind_(kind)
    {
    }
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

class InsufficientPrehistory : public Error {
public:
    InsufficientPrehistory(double required, double available)
        : Error(ErrorKind::InsufficientPrehistory,
                "prehistory covers " + std::to_string(available) + ", need " + std::to_string(required)),
          required_(required)
    {
    }
    double required() const { return required_; }

private:
    double required_;
};

} // namespace rnb
