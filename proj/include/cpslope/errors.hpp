#pragma once

#include <stdexcept>
#include <string>

namespace cpslope {

// Invalid hyper-parameters, scenario fields or sampler settings.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file contents (carries file/row context in the message).
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures: missing files, unwritable outputs.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cpslope
