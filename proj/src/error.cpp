#include "myomap/error.hpp"

namespace myomap {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingFile: return "MISSING_FILE";
        case ErrorCode::SchemaError: return "SCHEMA_ERROR";
        case ErrorCode::ShapeMismatch: return "SHAPE_MISMATCH";
        case ErrorCode::LabelError: return "LABEL_ERROR";
        case ErrorCode::EmptyClass: return "EMPTY_CLASS";
        case ErrorCode::BadFractions: return "BAD_FRACTIONS";
        case ErrorCode::BadSpacing: return "BAD_SPACING";
        case ErrorCode::BadSize: return "BAD_SIZE";
        case ErrorCode::ZeroReference: return "ZERO_REFERENCE";
        case ErrorCode::ConstantInput: return "CONSTANT_INPUT";
        case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
        case ErrorCode::InsufficientData: return "INSUFFICIENT_DATA";
        case ErrorCode::MissingSource: return "MISSING_SOURCE";
        case ErrorCode::EmptyMyocardium: return "EMPTY_MYOCARDIUM";
        case ErrorCode::EmptyInput: return "EMPTY_INPUT";
        case ErrorCode::NoUsableMaps: return "NO_USABLE_MAPS";
        case ErrorCode::SingleClass: return "SINGLE_CLASS";
        case ErrorCode::ClassTooSmall: return "CLASS_TOO_SMALL";
        case ErrorCode::MissingFeature: return "MISSING_FEATURE";
        case ErrorCode::EmptyTrain: return "EMPTY_TRAIN";
        case ErrorCode::SingleClassTrain: return "SINGLE_CLASS_TRAIN";
        case ErrorCode::SubjectMismatch: return "SUBJECT_MISMATCH";
        case ErrorCode::BadSpec: return "BAD_SPEC";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::SubsetViolation: return "SUBSET_VIOLATION";
    }
    return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace myomap
