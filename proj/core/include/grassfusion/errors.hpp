#pragma once

#include <stdexcept>
#include <string>

namespace gf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct ParameterError : Error { using Error::Error; };
struct DegenerateInputError : Error { using Error::Error; };
struct ContractViolationError : Error { using Error::Error; };
struct UnderdeterminedError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct FileError : Error { using Error::Error; };

}  // namespace gf
