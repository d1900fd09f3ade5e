#pragma once

#include <stdexcept>
#include <string>

namespace progslu {

// Error taxonomy shared across the library. The CLI maps IoError to exit
// code 2 and everything else derived from Error to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct ArgumentError : Error { using Error::Error; };
struct LookupError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct DeterminismError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace progslu
