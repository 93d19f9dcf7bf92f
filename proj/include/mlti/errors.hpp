#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace mlti {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct BoundsError : Error {
  using Error::Error;
};

// Shifted operator (A - sigma I) is numerically singular.
struct SingularError : Error {
  SingularError(const std::string& what, std::complex<double> s, double rc)
      : Error(what), sigma(s), rcond(rc) {}
  std::complex<double> sigma;
  double rcond;
};

// Serious Lanczos breakdown: W^T V of the new blocks is (nearly) singular.
struct BreakdownError : Error {
  BreakdownError(const std::string& what, int s) : Error(what), step(s) {}
  int step;
};

// H_m or G_m is singular, so Gamma and the derived bounds cannot be formed.
struct BoundUnavailableError : Error {
  using Error::Error;
};

struct NoCandidateError : Error {
  using Error::Error;
};

// lambda_i + conj(lambda_j) ~ 0 for some eigenvalue pair.
struct SingularPencilError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Malformed "T4 v1" tensor text.
struct FormatError : Error {
  using Error::Error;
};

}  // namespace mlti
