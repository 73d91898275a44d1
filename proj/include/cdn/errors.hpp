#pragma once

#include <stdexcept>
#include <string>

namespace cdn {

// Shared exception vocabulary. Everything derives from CdnError so callers
// (the CLI in particular) can catch one type and report the message.
struct CdnError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateSample : CdnError {
  using CdnError::CdnError;
};
struct OutOfUnitInterval : CdnError {
  using CdnError::CdnError;
};
struct ParamOutOfDomain : CdnError {
  using CdnError::CdnError;
};
struct InvalidMask : CdnError {
  using CdnError::CdnError;
};
struct UnsupportedArity : CdnError {
  using CdnError::CdnError;
};
struct InvalidModel : CdnError {
  using CdnError::CdnError;
};
struct EmptyModel : CdnError {
  using CdnError::CdnError;
};
struct ScheduleViolation : CdnError {
  using CdnError::CdnError;
};
struct OutOfSupport : CdnError {
  using CdnError::CdnError;
};
struct NoBracket : CdnError {
  using CdnError::CdnError;
};
struct MaxIterations : CdnError {
  using CdnError::CdnError;
};
struct InvalidSpec : CdnError {
  using CdnError::CdnError;
};

}  // namespace cdn
