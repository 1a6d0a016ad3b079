#pragma once

#include <stdexcept>
#include <string>

namespace lidkit {

// Process exit codes are part of the CLI contract.
enum class ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kData = 2,
    kIntegrity = 3,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad flags or inconsistent configuration.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ExitCode::kUsage, what) {}
};

/// Input data that cannot be processed (unreadable files, insufficient records,
/// corrupt encodings, non-finite numerics).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// Checkpoint checksum or version failures.
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& what) : Error(ExitCode::kIntegrity, what) {}
};

}  // namespace lidkit
