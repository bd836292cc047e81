#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace stein_icp {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Input errors map to exit code 2 in the CLI, numerical errors to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public InputError {
public:
    using InputError::InputError;
};

class ParseError : public InputError {
public:
    using InputError::InputError;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when every correspondence of a batch was rejected by the distance gate.
class NoCorrespondencesError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace stein_icp
