#pragma once

#include <Eigen/Dense>

namespace qkde {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace qkde
