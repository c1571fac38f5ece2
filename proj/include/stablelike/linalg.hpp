#pragma once
#include <Eigen/Dense>

namespace stablelike {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline double min_singular_value(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().minCoeff();
}

inline double operator_norm(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().maxCoeff();
}

}  // namespace stablelike
