#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace itedist {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or column mapping. `row` is 1-based over data rows
/// (the header is row 0); zero when the error is not tied to a row.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::size_t row = 0, std::string column = {})
      : Error(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// A covariate cell cannot support the leave-one-out objective.
class EstimabilityError : public Error {
 public:
  using Error::Error;
};

/// A bootstrap replication stayed degenerate after all permitted redraws.
class ReplicationError : public Error {
 public:
  ReplicationError(const std::string& what, std::size_t replication, std::size_t attempts)
      : Error(what), replication_(replication), attempts_(attempts) {}

  std::size_t replication() const noexcept { return replication_; }
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t replication_;
  std::size_t attempts_;
};

/// Invalid user-facing configuration (CLI flags, config files, selectors).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace itedist
