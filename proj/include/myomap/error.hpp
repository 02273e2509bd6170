#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace myomap {

enum class ErrorCode {
    MissingFile,
    SchemaError,
    ShapeMismatch,
    LabelError,
    EmptyClass,
    BadFractions,
    BadSpacing,
    BadSize,
    ZeroReference,
    ConstantInput,
    LengthMismatch,
    InsufficientData,
    MissingSource,
    EmptyMyocardium,
    EmptyInput,
    NoUsableMaps,
    SingleClass,
    ClassTooSmall,
    MissingFeature,
    EmptyTrain,
    SingleClassTrain,
    SubjectMismatch,
    BadSpec,
    IoError,
    InvalidArgument,
    SubsetViolation,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code; thrown by every module.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace myomap
