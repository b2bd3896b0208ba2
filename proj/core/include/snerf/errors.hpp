#pragma once

#include <stdexcept>
#include <string>

namespace snerf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SNERF_DEFINE_ERROR(Name)           \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

SNERF_DEFINE_ERROR(InvalidArgument);
SNERF_DEFINE_ERROR(BehindCamera);
SNERF_DEFINE_ERROR(NonPositiveDepth);
SNERF_DEFINE_ERROR(InvalidBounds);
SNERF_DEFINE_ERROR(EmptyInput);
SNERF_DEFINE_ERROR(DimensionMismatch);
SNERF_DEFINE_ERROR(LengthMismatch);
SNERF_DEFINE_ERROR(IndexOutOfRange);
SNERF_DEFINE_ERROR(MissingInput);
SNERF_DEFINE_ERROR(ArchitectureMismatch);
SNERF_DEFINE_ERROR(IoError);

#undef SNERF_DEFINE_ERROR

/// Raised when a loss term or a parameter becomes NaN/Inf. `term()` names the
/// offending quantity.
class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(std::string term)
      : Error("non-finite value in " + term), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

/// Text-format error with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace snerf
