// errors.hpp - exception types shared by every mvmorph module.

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace mvmorph {

// Bad shapes, mismatched manifolds, invalid parameters.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// log/geodesic requested between points whose minimizing geodesic is not unique
// (antipodes on the circle or the sphere).
class CutLocusError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Iterative Karcher mean did not reach its tolerance. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string &what, Eigen::VectorXd last)
        : std::runtime_error(what), last_iterate(std::move(last)) {}

    Eigen::VectorXd last_iterate;
};

// A composed deformation left the image domain.
class DegenerateDeformation : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or config.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace mvmorph
