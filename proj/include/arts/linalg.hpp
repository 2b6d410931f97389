#pragma once

#include "arts/types.hpp"

namespace arts::linalg {

// A = U * diag(sigma) * V^T with sigma sorted descending and U, V orthogonal.
struct Svd3 {
    Mat3 u;
    Vec3 sigma;
    Mat3 v;
};

// One-sided (Hestenes) Jacobi SVD of a 3x3 matrix.
Svd3 svd3(const Mat3& a);

// Moore-Penrose pseudo-inverse (minimum-norm) via complete orthogonal decomposition.
Mat pseudo_inverse(const Mat& a);

// Numerical rank with relative singular-value threshold.
Eigen::Index rank(const Mat& a, double rel_tol = 1e-10);

}  // namespace arts::linalg
