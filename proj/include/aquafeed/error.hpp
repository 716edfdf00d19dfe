// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aquafeed {

enum class ErrorKind {
  InvalidInput,
  DegenerateDetection,
  Parse,
  Validation,
  UnpairedFrame,
  Encode,
  Decode,
  Protocol,
  Io,
  Corrupt,
  NotFound,
  Conflict,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this type. `field` names the offending
// input (a JSON path, a struct field or a file path) when one applies.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string field, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " +
                           (field.empty() ? message : field + ": " + message)),
        kind_(kind),
        field_(std::move(field)),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }
  // The message without the kind and field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string field_;
  std::string message_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::DegenerateDetection: return "degenerate-detection";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Validation: return "validation-error";
    case ErrorKind::UnpairedFrame: return "unpaired-frame";
    case ErrorKind::Encode: return "encode-error";
    case ErrorKind::Decode: return "decode-error";
    case ErrorKind::Protocol: return "protocol-error";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Corrupt: return "corrupt";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Conflict: return "conflict";
  }
  return "unknown";
}

}  // namespace aquafeed
