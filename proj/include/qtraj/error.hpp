#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtraj {

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Malformed tabular input. Carries the 1-based row number (header = row 1).
class ParseError : public Error
{
public:
  ParseError(std::size_t row, const std::string& what)
    : Error("row " + std::to_string(row) + ": " + what)
    , row_(row)
  {}

  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

//! Input that parses but violates a contract (duplicate timestamps, bad
//! flag values, ...).
class ValidationError : public Error
{
public:
  using Error::Error;
};

//! Too few observations, globally or in the kernel window around a query.
class InsufficientDataError : public Error
{
public:
  using Error::Error;
};

//! Parametric fit did not converge or the data are separated.
class FitError : public Error
{
public:
  using Error::Error;
};

//! Quantile inversion could not bracket the requested level.
class InversionError : public Error
{
public:
  using Error::Error;
};

//! Query outside the level range on which an estimator is defined.
class DomainError : public Error
{
public:
  using Error::Error;
};

} // namespace qtraj
