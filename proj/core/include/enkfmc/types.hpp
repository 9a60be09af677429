#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace enkfmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Global or local component label. Labels are dense in [0, n).
using Index = std::int64_t;
using IndexList = std::vector<Index>;

}  // namespace enkfmc
