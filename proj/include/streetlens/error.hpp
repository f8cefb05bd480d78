#pragma once

#include <stdexcept>
#include <string>

namespace streetlens {

// Base for every error raised by the engine. Each module derives a class
// carrying its own code enum so callers can branch without string matching.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace streetlens
