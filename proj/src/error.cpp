#include "cdisp/error.hpp"

namespace cdisp {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidDistribution: return "invalid distribution";
    case ErrorCode::InvalidInput: return "invalid input";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::MissingGroundTruth: return "missing ground truth";
    case ErrorCode::EmptySet: return "empty set";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Spec: return "scene spec error";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace cdisp
