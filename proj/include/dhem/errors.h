#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhem {

// Base class for every error raised by the library. Drivers catch this type
// and turn it into a failed run instead of propagating.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every latent state of an observation has zero joint probability.
class DegenerateObservation : public Error {
 public:
  explicit DegenerateObservation(std::size_t index)
      : Error("degenerate observation " + std::to_string(index) +
              ": every component density underflows"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// A latent state carries annealed weight but has zero posterior probability
// under the comparison parameter.
class NumericalSupport : public Error {
 public:
  using Error::Error;
};

class InvalidBound : public Error {
 public:
  using Error::Error;
};

class InfeasibleParameters : public Error {
 public:
  using Error::Error;
};

// A mixture component lost (almost) all of its responsibility mass or its
// covariance collapsed.
class DegenerateComponent : public Error {
 public:
  using Error::Error;
};

class DefinitenessError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failure. Carries the last iterate so that callers can
// still inspect or reuse it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> last_iterate = {})
      : Error(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dhem
