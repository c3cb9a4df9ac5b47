#pragma once

#include <stdexcept>
#include <string>

namespace nkq {

enum class ErrorCode {
  InvalidArgument = 1,
  DimensionMismatch,
  NonFinite,
  DegenerateLengthscale,
  NoClosedFormKme,
  OracleUnsupported,
  SingularGram,
  Unsupported,
  Config,
  Io,
};

const char *to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message);

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string &detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string &message);

inline void require(bool condition, ErrorCode code, const char *message) {
  if (!condition) {
    fail(code, message);
  }
}

inline void require(bool condition, ErrorCode code, const std::string &message) {
  if (!condition) {
    fail(code, message);
  }
}

}  // namespace nkq
