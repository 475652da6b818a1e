#pragma once

#include <stdexcept>
#include <string>

namespace curvlam {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point or state lies outside the region where a chart or formula is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Kepler collision with the centre, or the spherical Hooke equator.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

// Configuration where an operation has no well-posed answer (e.g. ends collinear with O).
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace curvlam
