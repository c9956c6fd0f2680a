#pragma once

#include <stdexcept>
#include <string>

namespace samus {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SAMUS_ERROR(name)                       \
  class name : public Error {                   \
   public:                                      \
    explicit name(const std::string& what)      \
        : Error(what) {}                        \
  }

SAMUS_ERROR(InvalidInput);
SAMUS_ERROR(NotVisible);
SAMUS_ERROR(DegenerateFrame);
SAMUS_ERROR(UnsupportedOrbit);
SAMUS_ERROR(SingularRepresentation);
SAMUS_ERROR(IllConditionedFit);
SAMUS_ERROR(AlignmentError);
SAMUS_ERROR(DegenerateWedge);
SAMUS_ERROR(InvalidCovariance);
SAMUS_ERROR(SequencingError);
SAMUS_ERROR(ConfigError);
SAMUS_ERROR(NotReady);

#undef SAMUS_ERROR

}  // namespace samus
