#pragma once

#include <stdexcept>
#include <string>

namespace warfgate {

// Process exit status for each error family.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  data = 2,
  numerical = 3,
};

class Error : public std::runtime_error {
public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

private:
  ExitCode code_;
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(ExitCode::usage, what) {}
};

// Malformed input files, unknown columns or feature names, missing paths.
class SchemaError : public Error {
public:
  explicit SchemaError(const std::string& what) : Error(ExitCode::data, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ExitCode::data, what) {}
};

// Argument outside an operation's mathematical domain.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

// Inputs that leave nothing to learn or evaluate (single class, empty split, ...).
class DegenerateError : public Error {
public:
  explicit DegenerateError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

}  // namespace warfgate
