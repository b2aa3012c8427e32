#pragma once

#include <stdexcept>

namespace aggopt {

// A state became non-finite or blew past the divergence limit; usually the
// integration step is too large for the fastest mode.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aggopt
