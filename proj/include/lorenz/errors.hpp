#ifndef LORENZ_ERRORS_HPP
#define LORENZ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lorenz {

// Base for all domain errors raised by the library. Callers that only need
// coarse handling catch this; tests and the CLI match on the derived types.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define LORENZ_DEFINE_ERROR(NAME)          \
  struct NAME : Error {                    \
    using Error::Error;                    \
  }

LORENZ_DEFINE_ERROR(DegenerateParameters);
LORENZ_DEFINE_ERROR(EigenFailure);
LORENZ_DEFINE_ERROR(StiffnessFailure);
LORENZ_DEFINE_ERROR(NoEvent);
LORENZ_DEFINE_ERROR(SectionInvalid);
LORENZ_DEFINE_ERROR(NotOnSection);
LORENZ_DEFINE_ERROR(NotTrapping);
LORENZ_DEFINE_ERROR(EmptyCurves);
LORENZ_DEFINE_ERROR(EigenStructureUnexpected);
LORENZ_DEFINE_ERROR(TooCloseToAxis);
LORENZ_DEFINE_ERROR(WindingAmbiguous);
LORENZ_DEFINE_ERROR(BracketInvalid);
LORENZ_DEFINE_ERROR(SearchFailed);
LORENZ_DEFINE_ERROR(PathOutsideDomain);
LORENZ_DEFINE_ERROR(SeedNotFound);
LORENZ_DEFINE_ERROR(RefineFailed);
LORENZ_DEFINE_ERROR(NotPrimitive);
LORENZ_DEFINE_ERROR(SeparationTooSmall);
LORENZ_DEFINE_ERROR(ResolutionTooCoarse);
LORENZ_DEFINE_ERROR(GridTooSparse);
LORENZ_DEFINE_ERROR(ConfigError);

#undef LORENZ_DEFINE_ERROR

enum class Wing { Plus, Minus };

inline const char* wing_name(Wing w) { return w == Wing::Plus ? "p+" : "p-"; }

// Orbit fell into the basin of a fixed point before the requested
// event/crossing could happen.
struct Captured : Error {
  Wing wing;
  explicit Captured(Wing w, const std::string& what = "")
      : Error(what.empty() ? std::string("captured by ") + wing_name(w) : what), wing(w) {}
};

}  // namespace lorenz

#endif
