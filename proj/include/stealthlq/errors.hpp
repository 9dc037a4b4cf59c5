#ifndef STEALTHLQ_ERRORS_HPP
#define STEALTHLQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stealthlq {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Dimension or symmetry mismatch.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

// Argument outside its admissible domain (e.g. time outside [0, T]).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what) {}
};

// Matrix numerically singular where an inverse/root is required.
class SingularityError : public Error {
 public:
  explicit SingularityError(const std::string& what) : Error(what) {}
};

// Non-finite value produced during a numerical computation.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double t) : Error(what), t_(t) {}
  double where() const { return t_; }

 private:
  double t_;
};

// State norm blew past the guard threshold; carries the escape time so
// callers can report how far the integration got.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double t) : Error(what), t_(t) {}
  double where() const { return t_; }

 private:
  double t_;
};

// Bad configuration, unknown preset, malformed input file.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// Requested operation not defined for this model (e.g. non-commuting A
// in the closed-form detectability residual).
class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what) : Error(what) {}
};

}  // namespace stealthlq

#endif  // STEALTHLQ_ERRORS_HPP
