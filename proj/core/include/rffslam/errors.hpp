#pragma once

#include <stdexcept>
#include <string>

namespace rffslam {

// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Range/bearing evaluated with the sensor sitting on the landmark.
class DegenerateGeometry : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Input data that parses but is inconsistent (e.g. decreasing timestamps).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Factorization or iterative solve that did not succeed.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}

  // Relative residual reached when the failure was raised (0 if n/a).
  double residual() const { return residual_; }

 private:
  double residual_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message);

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& message);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace rffslam
