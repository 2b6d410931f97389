#include "arts/rotations.hpp"

#include <cmath>
#include <numbers>

#include "arts/error.hpp"
#include "arts/linalg.hpp"

namespace arts {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

// Unit vector perpendicular to u built from the coordinate axis least aligned with u.
Vec3 perpendicular(const Vec3& u) {
    Eigen::Index least = 0;
    u.cwiseAbs().minCoeff(&least);
    return u.cross(Vec3::Unit(least)).normalized();
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
    const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    require(ortho <= tol, ErrorKind::invalid_argument, "matrix is not orthonormal");
    require(std::abs(m.determinant() - 1.0) <= tol, ErrorKind::invalid_argument,
            "matrix has determinant != +1");
    return Rotation(m);
}

Rotation Rotation::from_axis_angle(const Vec3& v) {
    const double angle = v.norm();
    const Mat3 k = skew(v);
    if (angle < 1e-8) {
        // second-order Taylor expansion; the error term is O(angle^3)
        return Rotation(Mat3::Identity() + k + 0.5 * k * k);
    }
    const double a = std::sin(angle) / angle;
    const double b = (1.0 - std::cos(angle)) / (angle * angle);
    return Rotation(Mat3::Identity() + a * k + b * k * k);
}

Rotation Rotation::about(const Vec3& unit_axis, double angle) {
    const Mat3 k = skew(unit_axis);
    return Rotation(Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k);
}

Vec3 Rotation::to_axis_angle() const {
    const Vec3 w = 0.5 * vee(m_ - m_.transpose());
    const double s = w.norm();
    const double c = 0.5 * (m_.trace() - 1.0);
    const double angle = std::atan2(s, c);
    if (angle < 1e-6) return w * (1.0 + angle * angle / 6.0);
    if (c > -0.9) return w * (angle / s);

    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part instead, fixing its sign with w.
    const Mat3 outer = (0.5 * (m_ + m_.transpose()) - c * Mat3::Identity()) / (1.0 - c);
    Eigen::Index col = 0;
    outer.diagonal().maxCoeff(&col);
    Vec3 axis = outer.col(col).normalized();
    if (axis.dot(w) < 0.0) axis = -axis;
    return axis * angle;
}

Rotation rot6d_to_matrix(const Rot6D& r) {
    const Vec3 a1 = r.first();
    const Vec3 a2 = r.second();
    const double n1 = a1.norm();
    const double n2 = a2.norm();
    require(n1 > 1e-12 && n2 > 1e-12, ErrorKind::degenerate, "rot6d: zero-length embedded vector");
    const Vec3 b1 = a1 / n1;
    const double sin_between = b1.cross(a2 / n2).norm();
    require(sin_between >= std::sin(1e-6), ErrorKind::degenerate, "rot6d: embedded vectors are collinear");
    const Vec3 u = a2 - b1.dot(a2) * b1;
    const Vec3 b2 = u.normalized();
    Mat3 m;
    m.col(0) = b1;
    m.col(1) = b2;
    m.col(2) = b1.cross(b2);
    return Rotation::from_matrix_unchecked(m);
}

Rot6D matrix_to_rot6d(const Rotation& r) {
    const Mat3& m = r.matrix();
    return Rot6D{{m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)}};
}

double wrap_angle(double angle) {
    double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

Rotation swing_between(const Vec3& u, const Vec3& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    require(nu > 1e-9 && nv > 1e-9, ErrorKind::invalid_argument, "swing_between: zero-length vector");
    const Vec3 a = u / nu;
    const Vec3 b = v / nv;
    const Vec3 w = a.cross(b);
    const double s = w.norm();
    const double c = a.dot(b);
    if (c > -0.9) {
        const Mat3 k = skew(w);
        return Rotation::from_matrix_unchecked(Mat3::Identity() + k + k * k / (1.0 + c));
    }
    if (s <= 1e-12) return Rotation::about(perpendicular(a), kPi);
    return Rotation::about(w / s, std::atan2(s, c));
}

SwingTwist swing_twist_decompose(const Rotation& r, const Vec3& unit_axis) {
    require(std::abs(unit_axis.norm() - 1.0) <= 1e-9, ErrorKind::invalid_argument,
            "swing_twist_decompose: axis must be unit length");
    const Vec3 target = r * unit_axis;
    require(target.dot(unit_axis) > -1.0 + 1e-12 || target.cross(unit_axis).norm() > 1e-12,
            ErrorKind::degenerate, "swing_twist_decompose: 180 degree swing is singular");
    const Rotation swing = swing_between(unit_axis, target);
    const Mat3 twist = swing.matrix().transpose() * r.matrix();
    const Vec3 e = perpendicular(unit_axis);
    const Vec3 te = twist * e;
    const double angle = std::atan2(unit_axis.dot(e.cross(te)), e.dot(te));
    return {swing, wrap_angle(angle)};
}

double geodesic_distance(const Rotation& a, const Rotation& b) {
    const Mat3 d = a.matrix().transpose() * b.matrix();
    const double s = 0.5 * vee(d - d.transpose()).norm();
    const double c = 0.5 * (d.trace() - 1.0);
    return std::atan2(s, c);
}

Points Similarity::apply(const Points& x) const {
    Points out = (scale * (x * rotation.matrix().transpose())).rowwise() + translation.transpose();
    return out;
}

Similarity similarity_procrustes(const Points& x, const Points& y) {
    require(x.rows() == y.rows(), ErrorKind::shape_mismatch, "procrustes: point counts differ");
    require(x.rows() >= 3, ErrorKind::invalid_argument, "procrustes: need at least 3 points");
    const Vec3 mx = x.colwise().mean().transpose();
    const Vec3 my = y.colwise().mean().transpose();
    const Points xc = x.rowwise() - mx.transpose();
    const Points yc = y.rowwise() - my.transpose();

    const double var_x = xc.squaredNorm();
    const linalg::Svd3 scatter = linalg::svd3(xc.transpose() * xc);
    require(var_x > 1e-300 && scatter.sigma[1] > 1e-14 * scatter.sigma[0], ErrorKind::degenerate,
            "procrustes: source points are coincident or collinear");

    const Mat3 cov = yc.transpose() * xc;
    const linalg::Svd3 svd = linalg::svd3(cov);
    Vec3 d(1.0, 1.0, 1.0);
    if ((svd.u * svd.v.transpose()).determinant() < 0.0) d[2] = -1.0;
    const Mat3 rot = svd.u * d.asDiagonal() * svd.v.transpose();

    Similarity out;
    out.rotation = Rotation::from_matrix_unchecked(rot);
    out.scale = svd.sigma.dot(d) / var_x;
    out.translation = my - out.scale * (rot * mx);
    return out;
}

Rotation kabsch_directions(const Points& from, const Points& to) {
    require(from.rows() == to.rows(), ErrorKind::shape_mismatch, "kabsch: point counts differ");
    const Mat3 cov = to.transpose() * from;
    const linalg::Svd3 svd = linalg::svd3(cov);
    require(svd.sigma[1] > 1e-12 * std::max(svd.sigma[0], 1e-300), ErrorKind::degenerate,
            "kabsch: directions are collinear");
    Vec3 d(1.0, 1.0, 1.0);
    if ((svd.u * svd.v.transpose()).determinant() < 0.0) d[2] = -1.0;
    return Rotation::from_matrix_unchecked(svd.u * d.asDiagonal() * svd.v.transpose());
}

std::array<double, 6> rot6d_backward(const Rot6D& r, const Mat3& g) {
    const Vec3 a1 = r.first();
    const Vec3 a2 = r.second();
    const double n1 = a1.norm();
    const Vec3 b1 = a1 / n1;
    const Vec3 u = a2 - b1.dot(a2) * b1;
    const double n2 = u.norm();
    const Vec3 b2 = u / n2;

    Vec3 gb1 = g.col(0);
    Vec3 gb2 = g.col(1);
    const Vec3 gb3 = g.col(2);
    gb1 += b2.cross(gb3);
    gb2 += gb3.cross(b1);

    const Vec3 gu = (gb2 - b2 * b2.dot(gb2)) / n2;
    const Vec3 ga2 = gu - b1 * b1.dot(gu);
    gb1 += -a2 * b1.dot(gu) - b1.dot(a2) * gu;
    const Vec3 ga1 = (gb1 - b1 * b1.dot(gb1)) / n1;
    return {ga1.x(), ga1.y(), ga1.z(), ga2.x(), ga2.y(), ga2.z()};
}

std::array<Mat3, 3> axis_angle_jacobian(const Vec3& v) {
    std::array<Mat3, 3> out;
    const double sq = v.squaredNorm();
    if (sq < 1e-16) {
        for (int i = 0; i < 3; ++i) out[i] = skew(Vec3::Unit(i));
        return out;
    }
    // dR/dv_i = (v_i [v]x + [v x (I - R) e_i]x) / |v|^2 * R
    const Mat3 rot = Rotation::from_axis_angle(v).matrix();
    const Mat3 iminusr = Mat3::Identity() - rot;
    for (int i = 0; i < 3; ++i) {
        const Vec3 col = iminusr.col(i);
        out[i] = (v[i] * skew(v) + skew(v.cross(col))) / sq * rot;
    }
    return out;
}

}  // namespace arts
