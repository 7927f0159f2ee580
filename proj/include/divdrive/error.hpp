#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace divdrive {

enum class ErrorCode {
  kInvalidInput,
  kNoSharedScenario,
  kEmptySuccessSet,
  kNoCandidates,
  kInfeasibleReference,
  kConfig,
  kNonFiniteLoss,
  kCorrupt,
  kIo,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kNoSharedScenario: return "no-shared-scenario";
    case ErrorCode::kEmptySuccessSet: return "empty-success-set";
    case ErrorCode::kNoCandidates: return "no-candidates";
    case ErrorCode::kInfeasibleReference: return "infeasible-reference";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kNonFiniteLoss: return "non-finite-loss";
    case ErrorCode::kCorrupt: return "corrupt";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace divdrive
