#include "airsparse/errors.hpp"

#include <utility>

namespace airsparse {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::argument: return "argument error";
    case ErrorKind::range: return "range error";
    case ErrorKind::format: return "format error";
    case ErrorKind::unsupported_layout: return "unsupported-layout error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::config: return "config error";
    case ErrorKind::empty_mask: return "empty-mask error";
    case ErrorKind::sampling_exhausted: return "sampling-exhausted error";
    case ErrorKind::numerical_divergence: return "numerical-divergence error";
    case ErrorKind::empty_dictionary: return "empty-dictionary error";
    case ErrorKind::undefined_dice: return "undefined-dice error";
    case ErrorKind::initialization: return "initialization error";
  }
  return "error";
}

Error::Error(ErrorKind kind, std::string message)
    : kind_(kind), message_(std::move(message)) {
  rebuild();
}

void Error::attach_stage(std::string stage) {
  if (stage_.empty()) {
    stage_ = std::move(stage);
    rebuild();
  }
}

void Error::rebuild() {
  what_.clear();
  if (!stage_.empty()) what_ += "[" + stage_ + "] ";
  what_ += to_string(kind_);
  what_ += ": ";
  what_ += message_;
}

void fail(ErrorKind kind, std::string message) { throw Error(kind, std::move(message)); }

}  // namespace airsparse
