#pragma once

#include <Eigen/Dense>
#include <vector>

namespace arts {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// K x 3 point set, one joint (or vertex) per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Frame-major sequence of point sets.
using PointSequence = std::vector<Points>;

inline Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

}  // namespace arts
