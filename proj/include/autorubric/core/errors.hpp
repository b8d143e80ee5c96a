#pragma once

#include <stdexcept>
#include <string>

namespace autorubric {

/// Base of every error raised by the library. Each subclass names one failure
/// mode so callers can catch precisely what they can handle.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// judge-gateway
class MissingSlot : public Error {
 public:
  using Error::Error;
};
class UnknownTemplate : public Error {
 public:
  using Error::Error;
};
class JudgeUnavailable : public Error {
 public:
  using Error::Error;
};
class UnparseableVerdict : public Error {
 public:
  using Error::Error;
};

// rubric-forge
class CriterionCountOutOfRange : public Error {
 public:
  using Error::Error;
};

// reward-engine
class EmptyVerdicts : public Error {
 public:
  using Error::Error;
};
class MissingRubricReward : public Error {
 public:
  using Error::Error;
};
class GroupTooSmall : public Error {
 public:
  using Error::Error;
};
class SupportMismatch : public Error {
 public:
  using Error::Error;
};
class UnnormalizedDistribution : public Error {
 public:
  using Error::Error;
};

// grpo-sandbox
class DivergenceDetected : public Error {
 public:
  using Error::Error;
};

}  // namespace autorubric
