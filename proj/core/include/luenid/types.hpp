#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace luenid {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;
using ComplexList = std::vector<Complex>;

}  // namespace luenid
