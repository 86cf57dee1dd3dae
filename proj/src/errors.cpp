#include "gmto/errors.hpp"

namespace gmto {

namespace {
std::string with_line(const std::string& message, int line) {
  if (line <= 0) return message;
  return "line " + std::to_string(line) + ": " + message;
}
}  // namespace

ConfigError::ConfigError(const std::string& message, int line)
    : Error(with_line(message, line)), line_(line) {}

}  // namespace gmto
