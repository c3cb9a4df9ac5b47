#include "nkq/error.hpp"

namespace nkq {

const char *to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::InvalidArgument:
    return "invalid argument";
  case ErrorCode::DimensionMismatch:
    return "dimension mismatch";
  case ErrorCode::NonFinite:
    return "non-finite input";
  case ErrorCode::DegenerateLengthscale:
    return "degenerate lengthscale";
  case ErrorCode::NoClosedFormKme:
    return "no closed-form kernel mean embedding";
  case ErrorCode::OracleUnsupported:
    return "unsupported at oracle scale";
  case ErrorCode::SingularGram:
    return "singular Gram matrix";
  case ErrorCode::Unsupported:
    return "unsupported";
  case ErrorCode::Config:
    return "configuration error";
  case ErrorCode::Io:
    return "i/o error";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code), detail_(message) {}

void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

}  // namespace nkq
