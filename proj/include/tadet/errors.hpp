#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tadet {

// Malformed input file, config syntax, or bad key. CLI maps this to exit code 2.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite value. Carries the tag of the first bad tensor.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& tensor)
      : std::runtime_error("training diverged: first non-finite tensor is '" + tensor + "'"),
        tensor_name(tensor) {}

  std::string tensor_name;
};

// Checkpoint with an unsupported format version. CLI maps this to exit code 4.
class VersionError : public std::runtime_error {
 public:
  VersionError(std::uint32_t found_version, std::uint32_t expected_version)
      : std::runtime_error("checkpoint format version " + std::to_string(found_version) +
                           " is not supported (this build reads version " +
                           std::to_string(expected_version) + ")"),
        found(found_version),
        expected(expected_version) {}

  std::uint32_t found;
  std::uint32_t expected;
};

}  // namespace tadet
