#pragma once

#include <stdexcept>
#include <string>

namespace aerovio {

/// Constraint matrix does not have full row rank at the requested tolerance.
class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(long rank, long rows)
      : std::runtime_error("RankDeficient: numerical rank " + std::to_string(rank) +
                           " < " + std::to_string(rows) + " rows"),
        rank_(rank),
        rows_(rows) {}

  long rank() const { return rank_; }
  long rows() const { return rows_; }

 private:
  long rank_;
  long rows_;
};

/// A symmetric factorization failed even though the definiteness guard passed.
class NumericalFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class GeometryErrorCode {
  UnknownLandmarkId,
  MissingNextFrameObservation,
  MissingEarlierObservation,
  UnknownFrameId,
  LandmarkAboveCamera,
  DegenerateSystem,
  InvalidProblem,
};

class GeometryError : public std::runtime_error {
 public:
  GeometryError(GeometryErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  GeometryErrorCode code() const { return code_; }

 private:
  GeometryErrorCode code_;
};

/// Landmark field too sparse to give every frame triple the required co-visible set.
class InsufficientCoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration parse/validation failure; the message names the offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed serialized problem or run artifact.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aerovio
