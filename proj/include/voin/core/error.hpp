#pragma once

#include <stdexcept>
#include <string>

namespace voin {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// I/O and data-model errors.
class FormatError : public Error { using Error::Error; };
class GapError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };

// Configuration and generation errors.
class ParameterError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class SynthesisError : public Error { using Error::Error; };

// Numeric errors raised by models and training.
class NumericError : public Error { using Error::Error; };
class TrainingError : public Error { using Error::Error; };

}  // namespace voin
