#pragma once

#include <stdexcept>
#include <string>

namespace stepwise {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonHermitianInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class InvalidPovm : public Error {
 public:
  using Error::Error;
};

/// Overlap with the reference vanished; usually a level crossing between stencil points.
class OrthogonalStates : public Error {
 public:
  using Error::Error;
};

class NegativeProbability : public Error {
 public:
  using Error::Error;
};

class StencilFailure : public Error {
 public:
  using Error::Error;
};

class SingularQfim : public Error {
 public:
  SingularQfim(double det, double condition_number)
      : Error("singular QFIM: det=" + std::to_string(det) +
              " cond=" + std::to_string(condition_number)),
        det_(det),
        condition_number_(condition_number) {}

  double det() const noexcept { return det_; }
  double condition_number() const noexcept { return condition_number_; }

 private:
  double det_;
  double condition_number_;
};

class GammaOutOfRange : public Error {
 public:
  using Error::Error;
};

class DegenerateDiagonal : public Error {
 public:
  using Error::Error;
};

class DeltaTooLarge : public Error {
 public:
  using Error::Error;
};

class DimensionBudget : public Error {
 public:
  using Error::Error;
};

class UnnormalizedProbs : public Error {
 public:
  using Error::Error;
};

/// Every grid cell underflowed; the prior does not cover the data.
class ZeroLikelihood : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace stepwise
