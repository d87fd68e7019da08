#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fibro {

enum class ErrorKind {
    TruncatedFile,
    BadMagic,
    BadHeader,
    UnsupportedDatatype,
    UnsupportedDim,
    UnsupportedEncoding,
    NonFiniteData,
    InvalidSpec,
    IoFailure,
    EmptyMask,
    ShapeMismatch,
    NonFiniteLoss,
    SingleClass,
    TooFewSamples,
    EmptyList,
    SchemaError,
    UsageError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every recoverable failure in the library surfaces as an Error carrying its kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace fibro
