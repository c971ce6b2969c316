#pragma once

#include "uxpipe/action.hpp"
#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"

namespace uxpipe {

// Something a session can look at and act on. Implementations throw
// TransportError when the environment cannot be reached.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual Screenshot observe() = 0;
  virtual void apply(const ActionRecord& action) = 0;
  virtual void reset() = 0;
};

}  // namespace uxpipe
