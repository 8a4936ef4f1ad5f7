#ifndef KNT_ERROR_HPP
#define KNT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace knt {

enum class ErrorCode {
  NonAntiHermitian,
  RankDeficient,
  DimensionMismatch,
  EmptyComplement,
  IrrationalSpectrum,
  OutsideBall,
  BallExitsModel,
  HypothesisFailed,
  OrthogonalityFailed,
  LeftBall,
  Stagnation,
  MaxIterExceeded,
  OracleMismatch,
  NoLimit,
  NeverSatisfied,
  PreconditionFailed,
  InternalInconsistency,
  SchemaMismatch,
  ParseError,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a structured error code; the CLI maps codes to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace knt

#endif
