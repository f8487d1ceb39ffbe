#pragma once

#include <stdexcept>
#include <string>

namespace shapetrack {

// Every failure raised by the library derives from one of these. Argument
// validation uses InvalidArgument; runtime conditions use the specific types
// so callers (notably the CLI) can map them to exit codes.

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class BehindCamera : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SurfaceExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateFilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientPoints : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RefinementDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shapetrack
