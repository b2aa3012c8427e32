#pragma once

#include <Eigen/Dense>

namespace aggopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace aggopt
