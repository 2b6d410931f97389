#pragma once

#include <array>

#include "arts/types.hpp"

namespace arts {

// Proper rotation in SO(3). Construction through the named factories keeps the
// orthonormality invariant; `from_matrix` validates, `from_matrix_unchecked`
// trusts the caller (used on hot paths where the matrix is built orthonormal).
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    static Rotation identity() { return Rotation(); }
    static Rotation from_matrix(const Mat3& m, double tol = 1e-9);
    static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }
    // Rodrigues map; the vector's norm is the angle in radians.
    static Rotation from_axis_angle(const Vec3& axis_angle);
    static Rotation about(const Vec3& unit_axis, double angle);

    const Mat3& matrix() const { return m_; }
    Rotation inverse() const { return Rotation(m_.transpose()); }
    Vec3 to_axis_angle() const;

    Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }

private:
    explicit Rotation(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

// Continuous 6D encoding: two stacked 3-vectors (the first two matrix columns
// when produced by `matrix_to_rot6d`).
struct Rot6D {
    std::array<double, 6> values{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

    Vec3 first() const { return {values[0], values[1], values[2]}; }
    Vec3 second() const { return {values[3], values[4], values[5]}; }
};

struct SwingTwist {
    Rotation swing;
    double twist_angle = 0.0;  // radians, in (-pi, pi]
};

// Gram-Schmidt decoding. Throws ErrorKind::degenerate when either vector is
// near zero or the two are (anti)parallel within 1e-6 rad.
Rotation rot6d_to_matrix(const Rot6D& r);
Rot6D matrix_to_rot6d(const Rotation& r);

// R = swing * about(axis, twist). Throws ErrorKind::degenerate when R maps the
// axis onto its antipode.
SwingTwist swing_twist_decompose(const Rotation& r, const Vec3& unit_axis);

// Minimal rotation taking u/|u| onto v/|v|. Antiparallel inputs rotate by pi
// about unit(u x e), e the coordinate axis least aligned with u.
Rotation swing_between(const Vec3& u, const Vec3& v);

double wrap_angle(double angle);
double geodesic_distance(const Rotation& a, const Rotation& b);

struct Similarity {
    double scale = 1.0;
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    Points apply(const Points& x) const;
};

// Least-squares similarity (Umeyama/Kabsch with reflection correction) taking
// X onto Y. Requires K >= 3 and X not collinear.
Similarity similarity_procrustes(const Points& x, const Points& y);

// Unit-scale variant of the above used for multi-child joints in IK. Points are
// treated as direction vectors from a shared origin (no centering).
Rotation kabsch_directions(const Points& from, const Points& to);

// ---- derivatives used by the regressor's backward pass ----

// Given dL/dR for R = rot6d_to_matrix(r), returns dL/dr.
std::array<double, 6> rot6d_backward(const Rot6D& r, const Mat3& grad_matrix);

// dR/dv_i for R = exp([v]x), i = 0..2.
std::array<Mat3, 3> axis_angle_jacobian(const Vec3& v);

}  // namespace arts
