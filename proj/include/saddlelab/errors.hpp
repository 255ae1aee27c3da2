#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace saddlelab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad parameters, unsupported combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of a geometric map (cut locus, conjugate point,
/// rank-deficient projection). Optionally tagged with the iterate index at
/// which an optimizer hit it.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what, std::optional<long> iterate = std::nullopt)
      : Error(iterate ? what + " (at iterate " + std::to_string(*iterate) + ")" : what),
        iterate_(iterate) {}

  std::optional<long> iterate() const { return iterate_; }

 private:
  std::optional<long> iterate_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class LineSearchFailure : public Error {
 public:
  LineSearchFailure(long iteration, double alpha)
      : Error("line search exceeded its shrink cap at iteration " + std::to_string(iteration) +
              " (alpha reached " + std::to_string(alpha) + ")"),
        iteration_(iteration),
        alpha_(alpha) {}

  long iteration() const { return iteration_; }
  double alpha() const { return alpha_; }

 private:
  long iteration_;
  double alpha_;
};

class InnerSolverFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace saddlelab
