#pragma once

#include "aggopt/types.hpp"

namespace aggopt {

// Classical fixed-step fourth-order Runge-Kutta. The slope vectors are
// members so repeated steps on the same state size do not allocate.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(Eigen::Index dim)
      : k1_(dim), k2_(dim), k3_(dim), k4_(dim), work_(dim) {}

  // deriv(t, y, dydt) must write the derivative of y at t into dydt.
  template <typename Deriv>
  void step(Deriv&& deriv, double t, Vector& y, double h) {
    deriv(t, y, k1_);
    work_.noalias() = y + (0.5 * h) * k1_;
    deriv(t + 0.5 * h, work_, k2_);
    work_.noalias() = y + (0.5 * h) * k2_;
    deriv(t + 0.5 * h, work_, k3_);
    work_.noalias() = y + h * k3_;
    deriv(t + h, work_, k4_);
    y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
  }

 private:
  Vector k1_, k2_, k3_, k4_;
  Vector work_;
};

}  // namespace aggopt
