#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace detkit {

// Caller-supplied input violated a precondition. The CLI maps this family
// to exit code 1; anything else escaping to main is an internal error (2).
class InvalidInputError : public std::runtime_error {
 public:
  explicit InvalidInputError(const std::string& what)
      : std::runtime_error(what) {}
};

// Malformed file content. Carries the byte offset of the failure.
class ParseError : public InvalidInputError {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : InvalidInputError(what + " (byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t byte_offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Aggregate of independent failures collected while loading a dataset,
// so one bad manifest reports every problem at once.
class LoadError : public InvalidInputError {
 public:
  explicit LoadError(std::vector<std::string> failures)
      : InvalidInputError(join(failures)), failures_(std::move(failures)) {}

  const std::vector<std::string>& failures() const { return failures_; }

 private:
  static std::string join(const std::vector<std::string>& failures) {
    std::string msg = std::to_string(failures.size()) + " load failure(s):";
    for (const auto& f : failures) msg += "\n  " + f;
    return msg;
  }

  std::vector<std::string> failures_;
};

}  // namespace detkit
