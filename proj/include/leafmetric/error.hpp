#pragma once

#include <stdexcept>
#include <string>

namespace leafmetric {

/// Base class for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (PLY, PGM, CSV, JSON). The message names the line
/// number or byte offset where parsing stopped.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A mask that marks no pixel as leaf.
class EmptyMaskError : public Error {
 public:
  using Error::Error;
};

/// Organized-grid metadata missing, or not matching a mask.
class GridError : public Error {
 public:
  using Error::Error;
};

/// Too few usable points for the requested geometry.
class InsufficientPointsError : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but admits no answer (collinear samples,
/// constant ground truth, zero-width leaf, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// RANSAC found no model with enough support.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Too few leaf ids shared between measurements and ground truth.
class JoinError : public Error {
 public:
  using Error::Error;
};

}  // namespace leafmetric
