#pragma once

#include <Eigen/Dense>

namespace gpcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace gpcp
