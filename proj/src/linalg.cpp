#include "arts/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace arts::linalg {

Svd3 svd3(const Mat3& a) {
    Mat3 b = a;
    Mat3 v = Mat3::Identity();
    constexpr double kEps = 1e-15;
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double alpha = b.col(p).squaredNorm();
                const double beta = b.col(q).squaredNorm();
                const double gamma = b.col(p).dot(b.col(q));
                if (std::abs(gamma) <= kEps * std::sqrt(alpha * beta) || gamma == 0.0) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Mat3* m : {&b, &v}) {
                    const Vec3 cp = m->col(p);
                    const Vec3 cq = m->col(q);
                    m->col(p) = c * cp - s * cq;
                    m->col(q) = s * cp + c * cq;
                }
            }
        }
        if (!rotated) break;
    }

    std::array<int, 3> order{0, 1, 2};
    Vec3 norms(b.col(0).norm(), b.col(1).norm(), b.col(2).norm());
    std::sort(order.begin(), order.end(), [&](int i, int j) { return norms[i] > norms[j]; });

    Svd3 out;
    for (int k = 0; k < 3; ++k) {
        out.sigma[k] = norms[order[k]];
        out.v.col(k) = v.col(order[k]);
        out.u.col(k) = b.col(order[k]);
    }
    // Columns of U for (near-)zero singular values are completed to an
    // orthonormal basis; their scale is irrelevant to A.
    const double tiny = std::max(out.sigma[0], 1.0) * 1e-300;
    if (out.sigma[0] <= tiny) {
        out.u = Mat3::Identity();
        return out;
    }
    out.u.col(0) /= out.sigma[0];
    if (out.sigma[1] > out.sigma[0] * 1e-14) {
        out.u.col(1) /= out.sigma[1];
        out.u.col(1) -= out.u.col(0) * out.u.col(0).dot(out.u.col(1));
        out.u.col(1).normalize();
    } else {
        const Vec3 u0 = out.u.col(0);
        Eigen::Index least = 0;
        u0.cwiseAbs().minCoeff(&least);
        out.u.col(1) = u0.cross(Vec3::Unit(least)).normalized();
    }
    if (out.sigma[2] > out.sigma[0] * 1e-14) {
        Vec3 u2 = out.u.col(2) / out.sigma[2];
        u2 -= out.u.col(0) * out.u.col(0).dot(u2);
        u2 -= out.u.col(1) * out.u.col(1).dot(u2);
        out.u.col(2) = u2.normalized();
    } else {
        out.u.col(2) = out.u.col(0).cross(out.u.col(1));
    }
    return out;
}

Mat pseudo_inverse(const Mat& a) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(a);
    return cod.pseudoInverse();
}

Eigen::Index rank(const Mat& a, double rel_tol) {
    Eigen::JacobiSVD<Mat> svd(a);
    const Vec s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    return std::count_if(s.begin(), s.end(), [&](double x) { return x > rel_tol * s[0]; });
}

}  // namespace arts::linalg
