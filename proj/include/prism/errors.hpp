#pragma once

#include <stdexcept>
#include <string>

namespace prism {

// Failure families map one-to-one onto CLI exit codes:
// validation -> 1, transport -> 2, parse -> 3.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseFailure : std::runtime_error {
  explicit ParseFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace prism
