#pragma once

#include <stdexcept>
#include <string>

namespace parabolicity {

/// Base of every error raised by the pipeline. Carries an optional stage
/// label ("solve", "volume", "growth", ...) filled in by `certify`.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}

  const std::string& stage() const noexcept { return stage_; }
  void set_stage(std::string stage) { stage_ = std::move(stage); }

 private:
  std::string stage_;
};

#define PARABOLICITY_DEFINE_ERROR(Name)                        \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what) : Error(what) {}    \
  }

// Argument outside the region where a formula is defined.
PARABOLICITY_DEFINE_ERROR(DomainError);
PARABOLICITY_DEFINE_ERROR(ParameterError);
PARABOLICITY_DEFINE_ERROR(NotFound);
// Adaptive controller shrank the step below round-off.
PARABOLICITY_DEFINE_ERROR(StepFailure);
// Comparison function has a zero inside the requested range.
PARABOLICITY_DEFINE_ERROR(ConjugateRadius);
PARABOLICITY_DEFINE_ERROR(PreconditionError);
PARABOLICITY_DEFINE_ERROR(WindowError);
// Model curvature is below the profile somewhere, so no comparison is implied.
PARABOLICITY_DEFINE_ERROR(HypothesisError);
PARABOLICITY_DEFINE_ERROR(ConfigError);

#undef PARABOLICITY_DEFINE_ERROR

}  // namespace parabolicity
