#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace etaxi {

/// External junction identifier as it appears in graph files.
using JunctionId = std::int64_t;

/// Dense index of a junction inside a RoadGraph (junctions sorted by id).
using NodeIndex = std::uint32_t;

inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline constexpr int kHoursPerDay = 24;
inline constexpr int kMinutesPerDay = 24 * 60;

/// Error categories map onto CLI exit codes.
enum class ErrorKind { Config = 2, Data = 3, Infeasible = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Unreadable inputs, schema problems, hash mismatches.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(const std::string& what) : DataError(what) {}
};

class IoError : public DataError {
 public:
  explicit IoError(const std::string& what) : DataError(what) {}
};

class NoPathError : public DataError {
 public:
  explicit NoPathError(const std::string& what) : DataError(what) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what)
      : Error(ErrorKind::Infeasible, what) {}
};

}  // namespace etaxi
