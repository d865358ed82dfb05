#pragma once

#include <stdexcept>
#include <string>

namespace colander {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define COLANDER_DEFINE_ERROR(Name)            \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  }

COLANDER_DEFINE_ERROR(DomainError);
COLANDER_DEFINE_ERROR(ProfileError);
COLANDER_DEFINE_ERROR(PreconditionError);
COLANDER_DEFINE_ERROR(GeometryError);
COLANDER_DEFINE_ERROR(ConfigError);
COLANDER_DEFINE_ERROR(SolverError);
COLANDER_DEFINE_ERROR(UnsupportedDimension);
COLANDER_DEFINE_ERROR(AlphaError);
COLANDER_DEFINE_ERROR(FitError);

#undef COLANDER_DEFINE_ERROR

// Raised by the subharmonic construction; carries the offending shell index.
class ConstructionInfeasible : public Error {
 public:
  ConstructionInfeasible(const std::string& what, int shell)
      : Error(what + " (shell " + std::to_string(shell) + ")"), shell_(shell) {}
  int shell() const noexcept { return shell_; }

 private:
  int shell_;
};

}  // namespace colander
