#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace airsparse {

enum class ErrorKind {
  argument,
  range,
  format,
  unsupported_layout,
  io,
  config,
  empty_mask,
  sampling_exhausted,
  numerical_divergence,
  empty_dictionary,
  undefined_dice,
  initialization,
};

std::string_view to_string(ErrorKind kind);

// Library-wide exception. Every failure carries a kind so that callers (the
// CLI in particular) can map it to an exit status, and an optional pipeline
// stage that is attached as the error propagates outward.
class Error : public std::exception {
 public:
  Error(ErrorKind kind, std::string message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& stage() const noexcept { return stage_; }

  // Only the innermost stage is kept.
  void attach_stage(std::string stage);

  const char* what() const noexcept override { return what_.c_str(); }

 private:
  void rebuild();

  ErrorKind kind_;
  std::string message_;
  std::string stage_;
  std::string what_;
};

[[noreturn]] void fail(ErrorKind kind, std::string message);

inline void require(bool condition, ErrorKind kind, std::string_view message) {
  if (!condition) fail(kind, std::string(message));
}

}  // namespace airsparse
