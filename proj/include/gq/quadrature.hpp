#ifndef GQ_QUADRATURE_HPP
#define GQ_QUADRATURE_HPP

#include <Eigen/Dense>

namespace gq {

struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// n-point Gauss-Legendre rule on [-1, 1].
GaussRule gauss_legendre(int n);

// Same rule mapped to [a, b].
GaussRule gauss_legendre(int n, double a, double b);

}  // namespace gq

#endif
