#pragma once

#include <stdexcept>
#include <string>

namespace relsym {

/// Shape/dimension mismatch between tensors or model inputs.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// API misuse: an operation was called outside its contract
/// (non-scalar loss, hard thresholding inside a gradient pass, wrong
/// architecture tag, unsettled world handed to execute, ...).
struct ContractError : std::logic_error {
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

/// Bad or missing data: unreadable files, malformed records, refused splits.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure (NaN/Inf loss abort). Carries the training diagnostic.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace relsym
