#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emseg {

// Every failure the library reports carries one of these codes. The CLI prints
// the code name on stderr so scripts can match on it.
enum class ErrorCode {
    BadMagic,
    TruncatedFile,
    UnknownDtype,
    DimOverflow,
    IoFailure,
    InvalidArgument,
    DtypeMismatch,
    OutOfRangeProbability,
    DegenerateSplit,
    PatchLargerThanVolume,
    LayoutMismatch,
    WrongPatchCount,
    OddLength,
    EmptyMask,
    InterpolationOnMask,
    BadKernelSize,
    BadAugmentSpec,
    PredictorShapeMismatch,
    PredictorRangeViolation,
    PredictorFailure,
    EvenWindow,
    DimMismatch,
    MissingLayout,
    SyntaxError,
    EmptyChoice,
    BadStep,
    ReversedRange,
    DuplicateName,
    InfiniteSpace,
    NotAMember,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace emseg
