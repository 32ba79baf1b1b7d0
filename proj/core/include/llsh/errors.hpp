#pragma once

#include <stdexcept>
#include <string>

namespace llsh {

/// Raised when an input file, stream or serialized blob is missing,
/// malformed or inconsistent with what the caller expects (wrong magic,
/// dimension mismatch between artifacts, non-finite values, ...).
/// Distinct from std::invalid_argument, which is reserved for bad
/// configuration / contract violations.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace llsh
