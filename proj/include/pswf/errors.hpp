#pragma once

#include <stdexcept>
#include <string>

namespace pswf {

/// Base class of every exception thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain on which an operation is defined.
class domain_error : public error {
 public:
  using error::error;
};

/// A numerical procedure (adaptive discretization, ODE solve, eigen solve)
/// did not reach its acceptance criterion within its budget.
class solver_failure : public error {
 public:
  using error::error;
};

/// Malformed or unreadable table file.
class format_error : public error {
 public:
  using error::error;
};

class bad_magic_error : public format_error {
 public:
  using format_error::format_error;
};

class truncated_file_error : public format_error {
 public:
  using format_error::format_error;
};

class checksum_error : public format_error {
 public:
  using format_error::format_error;
};

/// Structural invariant of a loaded table is violated (non-monotone
/// breakpoints, wrong coefficient count, ...).
class invalid_table_error : public format_error {
 public:
  using format_error::format_error;
};

class io_error : public error {
 public:
  using error::error;
};

}  // namespace pswf
