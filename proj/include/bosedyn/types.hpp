#pragma once

#include <Eigen/Dense>
#include <complex>

namespace bose {

using cplx = std::complex<double>;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;
using cmat = Eigen::MatrixXcd;
using rmat = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

}  // namespace bose
