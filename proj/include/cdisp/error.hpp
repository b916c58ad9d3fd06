#pragma once

#include <stdexcept>
#include <string>

namespace cdisp {

// Mirrors cdisp_status in cdisp.h; values must stay in sync.
enum class ErrorCode {
  InvalidDistribution = 1,
  InvalidInput = 2,
  Domain = 3,
  MissingGroundTruth = 4,
  EmptySet = 5,
  Format = 6,
  Parse = 7,
  Spec = 8,
  Io = 9,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cdisp
