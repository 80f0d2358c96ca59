#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace grvfl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (CSV row/column, JSON content).
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Shape mismatch between matrices, datasets, or stored model dimensions.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// Argument outside its documented domain.
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A linear system could not be solved to a finite answer.
class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Serialized document of the wrong kind or version.
class SchemaError : public Error {
  public:
    using Error::Error;
};

/// The two label values of a binary problem, ascending. Column j of a
/// one-hot target (and of a score matrix) belongs to class_order[j].
using ClassOrder = std::array<std::string, 2>;

}  // namespace grvfl
