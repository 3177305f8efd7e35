// Copyright Contributors to the gscodec project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gscodec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unsupported PLY input. `property()` names the offending
/// property when one is known.
class PlyError : public Error {
public:
    PlyError(const std::string& message, std::string property = {})
        : Error(property.empty() ? message : message + " (property '" + property + "')"),
          property_(std::move(property)) {}

    const std::string& property() const noexcept { return property_; }

private:
    std::string property_;
};

/// Failure while reading a compact scene container.
class DecodeError : public Error {
public:
    enum class Code { truncated, bad_magic, bad_version, index_out_of_range, crc_mismatch, malformed };

    DecodeError(Code code, const std::string& message) : Error(message), code_(code) {}

    Code code() const noexcept { return code_; }

private:
    Code code_;
};

/// A training loop produced a non-finite or diverging loss.
class TrainingError : public Error {
public:
    TrainingError(const std::string& message, std::size_t iteration)
        : Error(message + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

}  // namespace gscodec
