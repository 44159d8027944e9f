#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ransae {

enum class ErrorKind : std::uint8_t {
    MissingColumn,
    RaggedRow,
    NonNumericCell,
    UnknownCategory,
    DegenerateSplit,
    ShapeMismatch,
    LabelOutOfRange,
    EmptyData,
    DegenerateClasses,
    LengthMismatch,
    EmptyMatrix,
    ClassSetMismatch,
    InsufficientRows,
    SchemaMismatch,
    ChecksumMismatch,
    InvalidArgument,
    ConfigError,
    IoError,
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::RaggedRow: return "RaggedRow";
    case ErrorKind::NonNumericCell: return "NonNumericCell";
    case ErrorKind::UnknownCategory: return "UnknownCategory";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::DegenerateClasses: return "DegenerateClasses";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::ClassSetMismatch: return "ClassSetMismatch";
    case ErrorKind::InsufficientRows: return "InsufficientRows";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// Process exit code for a failure of the given kind:
/// 1 validation/config, 2 I/O, 3 data.
inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
        return 1;
    case ErrorKind::IoError:
        return 2;
    default:
        return 3;
    }
}

/// The single exception type thrown by the library. `kind()` identifies the
/// failure class; `what()` carries a human-readable message with context.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), detail_(message)
    {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Message without the kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

} // namespace ransae
