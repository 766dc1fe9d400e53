#pragma once

#include <stdexcept>
#include <string>

namespace tsipa {

enum class ErrorCode {
  kDomain,
  kUnderdetermined,
  kSingularGeometry,
  kDivergence,
  kDegenerateInput,
  kPrecondition,
  kIo,
};

const char* to_string(ErrorCode code);

/// Error raised by every module. `stage()` is filled in by the pipeline
/// driver ("stage1", "stage2", "stage3") when a failure crosses a stage
/// boundary; `value()` carries a numeric detail such as a condition number.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, double value = 0.0)
      : std::runtime_error(what), code_(code), value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  double value() const noexcept { return value_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    Error e = *this;
    e.stage_ = std::move(stage);
    return e;
  }

 private:
  ErrorCode code_;
  double value_;
  std::string stage_;
};

}  // namespace tsipa
