#include "arts/body_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "arts/error.hpp"
#include "arts/linalg.hpp"
#include "arts/random.hpp"

namespace arts {

KinematicTree::KinematicTree(std::vector<int> parents) : parents_(std::move(parents)) {
    const int n = size();
    require(n >= 1 && parents_[0] < 0, ErrorKind::invalid_argument, "kinematic tree: joint 0 must be the root");
    children_.assign(n, {});
    for (int j = 1; j < n; ++j) {
        require(parents_[j] >= 0 && parents_[j] < n && parents_[j] != j, ErrorKind::invalid_argument,
                "kinematic tree: invalid parent for joint " + std::to_string(j));
        children_[parents_[j]].push_back(j);
        edges_.push_back({parents_[j], j});
    }
    std::deque<int> queue{0};
    while (!queue.empty()) {
        const int j = queue.front();
        queue.pop_front();
        order_.push_back(j);
        for (int c : children_[j]) queue.push_back(c);
    }
    require(static_cast<int>(order_.size()) == n, ErrorKind::invalid_argument,
            "kinematic tree: parents contain a cycle or unreachable joint");
}

Vec3 KinematicTree::twist_axis(const Points& rest, int j) const {
    Vec3 d;
    if (!children_[j].empty()) {
        d = rest.row(children_[j].front()).transpose() - rest.row(j).transpose();
    } else {
        require(parents_[j] >= 0, ErrorKind::invalid_argument, "twist axis undefined for an isolated root");
        d = rest.row(j).transpose() - rest.row(parents_[j]).transpose();
    }
    require(d.norm() > 1e-9, ErrorKind::degenerate, "zero-length rest bone at joint " + std::to_string(j));
    return d.normalized();
}

std::vector<Rotation> rotations_from_theta(const Vec& theta) {
    require(theta.size() % 3 == 0, ErrorKind::shape_mismatch, "theta length must be a multiple of 3");
    std::vector<Rotation> out;
    out.reserve(theta.size() / 3);
    for (Eigen::Index j = 0; j < theta.size() / 3; ++j) {
        out.push_back(Rotation::from_axis_angle(theta.segment<3>(3 * j)));
    }
    return out;
}

Vec theta_from_rotations(std::span<const Rotation> rotations) {
    Vec theta(3 * static_cast<Eigen::Index>(rotations.size()));
    for (size_t j = 0; j < rotations.size(); ++j) theta.segment<3>(3 * j) = rotations[j].to_axis_angle();
    return theta;
}

namespace {

// Rest skeleton in meters, y up, subject facing +z.
constexpr double kDesignJoints[kJointCount][3] = {
    {0.000, 0.000, 0.000},    // pelvis
    {0.060, -0.090, 0.000},   // left hip
    {-0.060, -0.090, 0.000},  // right hip
    {0.000, 0.110, -0.010},   // spine1
    {0.100, -0.470, 0.010},   // left knee
    {-0.100, -0.470, 0.010},  // right knee
    {0.000, 0.250, 0.020},    // spine2
    {0.090, -0.870, -0.030},  // left ankle
    {-0.090, -0.870, -0.030}, // right ankle
    {0.000, 0.310, 0.020},    // spine3
    {0.110, -0.930, 0.090},   // left foot
    {-0.110, -0.930, 0.090},  // right foot
    {0.000, 0.520, -0.010},   // neck
    {0.070, 0.430, 0.000},    // left collar
    {-0.070, 0.430, 0.000},   // right collar
    {0.000, 0.610, 0.040},    // head
    {0.180, 0.460, -0.010},   // left shoulder
    {-0.180, 0.460, -0.010},  // right shoulder
    {0.430, 0.440, -0.030},   // left elbow
    {-0.430, 0.440, -0.030},  // right elbow
    {0.680, 0.450, -0.020},   // left wrist
    {-0.680, 0.450, -0.020},  // right wrist
    {0.770, 0.440, -0.030},   // left hand
    {-0.770, 0.440, -0.030},  // right hand
};

Vec3 random_unit(Rng& rng) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
}

}  // namespace

MiniBodyModel build_synthetic_model(std::uint64_t seed, int vertex_count) {
    constexpr int kCorePerJoint = 4;
    require(vertex_count >= kCorePerJoint * kJointCount, ErrorKind::invalid_argument,
            "vertex_count must be at least " + std::to_string(kCorePerJoint * kJointCount));
    Rng rng(seed);
    const KinematicTree tree(std::vector<int>(std::begin(kSmplParents), std::end(kSmplParents)));

    Points joints(kJointCount, 3);
    for (int j = 0; j < kJointCount; ++j) {
        for (int c = 0; c < 3; ++c) joints(j, c) = kDesignJoints[j][c] + rng.uniform(-0.005, 0.005);
    }

    MiniBodyModel model;
    model.parents = tree.parents();
    model.edges = tree.edges();
    const int v_count = vertex_count;
    Points verts(v_count, 3);
    model.joint_regressor = Mat::Zero(kJointCount, v_count);
    model.skin_weights = Mat::Zero(v_count, kJointCount);

    // Core vertices: a randomly oriented tetrahedron around every joint. They
    // carry the joint regressor and are skinned to the joint and its parent.
    const Vec3 tetra[kCorePerJoint] = {Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1)};
    for (int j = 0; j < kJointCount; ++j) {
        const Rotation orient = Rotation::from_axis_angle(random_unit(rng) * rng.uniform(0.0, 3.0));
        const double radius = rng.uniform(0.02, 0.04);
        double weight_sum = 0.0;
        for (int k = 0; k < kCorePerJoint; ++k) {
            const int v = kCorePerJoint * j + k;
            verts.row(v) = joints.row(j) + (orient * tetra[k].normalized() * radius).transpose();
            const double w = rng.uniform(0.5, 1.5);
            model.joint_regressor(j, v) = w;
            weight_sum += w;
            const int p = tree.parent(j);
            if (p < 0) {
                model.skin_weights(v, j) = 1.0;
            } else {
                const double own = rng.uniform(0.6, 1.0);
                model.skin_weights(v, j) = own;
                model.skin_weights(v, p) = 1.0 - own;
            }
        }
        model.joint_regressor.row(j) /= weight_sum;
    }

    // Remaining vertices sit around bones, skinned mostly to the bone's parent joint.
    const auto& edges = tree.edges();
    for (int v = kCorePerJoint * kJointCount; v < v_count; ++v) {
        const Edge e = edges[static_cast<size_t>(v) % edges.size()];
        const Vec3 a = joints.row(e.parent).transpose();
        const Vec3 b = joints.row(e.child).transpose();
        const double t = rng.uniform(0.2, 0.8);
        const Vec3 dir = (b - a).normalized();
        Vec3 radial = random_unit(rng);
        radial -= dir * dir.dot(radial);
        if (radial.norm() < 1e-6) radial = dir.unitOrthogonal();
        verts.row(v) = (a + t * (b - a) + radial.normalized() * rng.uniform(0.03, 0.05)).transpose();
        model.skin_weights(v, e.parent) = 1.0 - 0.5 * t;
        model.skin_weights(v, e.child) = 0.5 * t;
    }

    // Minimum-norm vertex correction so the regressor reproduces the designed
    // rest joints exactly.
    const Mat w_pinv = linalg::pseudo_inverse(model.joint_regressor);
    verts += w_pinv * (joints - model.joint_regressor * verts);
    model.template_vertices = verts;

    // Shape directions change bone lengths along their rest directions. Each
    // coefficient scales bones by at most 2.5% of their rest length, so every
    // beta in [-2, 2]^10 keeps all bones positive.
    const Points rest = model.joint_regressor * model.template_vertices;
    Mat joint_offsets = Mat::Zero(3 * kJointCount, kShapeDim);
    for (int k = 0; k < kShapeDim; ++k) {
        for (int j : tree.order()) {
            const int p = tree.parent(j);
            if (p < 0) continue;
            const Vec3 bone = rest.row(j).transpose() - rest.row(p).transpose();
            const double change = (k == 0 ? 0.02 : rng.uniform(-0.025, 0.025)) * bone.norm();
            const Vec3 offset = joint_offsets.block<3, 1>(3 * p, k) + change * bone.normalized();
            joint_offsets.block<3, 1>(3 * j, k) = offset;
        }
    }
    // Lift joint offsets to the mesh through the regressor's pseudo-inverse so
    // that the regressor reproduces them exactly.
    model.shape_blend = Mat::Zero(3 * v_count, kShapeDim);
    for (int k = 0; k < kShapeDim; ++k) {
        const Mat per_joint = joint_offsets.col(k).reshaped<Eigen::RowMajor>(kJointCount, 3);
        const Mat per_vertex = w_pinv * per_joint;
        model.shape_blend.col(k) = per_vertex.reshaped<Eigen::RowMajor>();
    }

    validate_model(model);
    return model;
}

void validate_model(const MiniBodyModel& model) {
    const int v = model.vertex_count();
    const int k = model.joint_count();
    require(k == kJointCount, ErrorKind::invalid_argument, "model must have 24 joints");
    require(model.shape_blend.rows() == 3 * v && model.shape_blend.cols() == kShapeDim, ErrorKind::shape_mismatch,
            "shape_blend must be (3V) x 10");
    require(model.joint_regressor.rows() == k && model.joint_regressor.cols() == v, ErrorKind::shape_mismatch,
            "joint_regressor must be K x V");
    require(model.skin_weights.rows() == v && model.skin_weights.cols() == k, ErrorKind::shape_mismatch,
            "skin_weights must be V x K");
    const KinematicTree tree(model.parents);
    require(static_cast<int>(model.edges.size()) == k - 1, ErrorKind::invalid_argument, "edge count must be K - 1");
    for (size_t i = 0; i < model.edges.size(); ++i) {
        require(model.edges[i].parent == tree.edges()[i].parent && model.edges[i].child == tree.edges()[i].child,
                ErrorKind::invalid_argument, "edge list disagrees with parents");
    }
    for (const Mat* m : {&model.joint_regressor, &model.skin_weights}) {
        require(m->minCoeff() >= 0.0, ErrorKind::invalid_argument, "weights must be non-negative");
        const Vec sums = m->rowwise().sum();
        require((sums.array() - 1.0).abs().maxCoeff() <= 1e-9, ErrorKind::invalid_argument,
                "weight rows must sum to 1");
    }
    require(linalg::rank(composed_joint_map(model)) == kShapeDim, ErrorKind::degenerate,
            "composed joint map must have full column rank");
}

Points shaped_vertices(const MiniBodyModel& model, const Vec& beta) {
    require(beta.size() == kShapeDim, ErrorKind::shape_mismatch, "beta must have 10 entries");
    const Vec offsets = model.shape_blend * beta;
    return model.template_vertices + offsets.reshaped<Eigen::RowMajor>(model.vertex_count(), 3);
}

Points rest_joints(const MiniBodyModel& model, const Vec& beta) {
    return model.joint_regressor * shaped_vertices(model, beta);
}

Points regress_joints(const MiniBodyModel& model, const Points& vertices) {
    require(vertices.rows() == model.vertex_count(), ErrorKind::shape_mismatch, "vertex count mismatch");
    return model.joint_regressor * vertices;
}

Mat composed_joint_map(const MiniBodyModel& model) {
    const int v = model.vertex_count();
    const int k = model.joint_count();
    Mat out(3 * k, model.shape_blend.cols());
    for (Eigen::Index s = 0; s < model.shape_blend.cols(); ++s) {
        const Mat per_vertex = model.shape_blend.col(s).reshaped<Eigen::RowMajor>(v, 3);
        const Mat per_joint = model.joint_regressor * per_vertex;
        out.col(s) = per_joint.reshaped<Eigen::RowMajor>();
    }
    return out;
}

std::vector<double> template_bone_lengths(const MiniBodyModel& model) {
    const Points rest = rest_joints(model, Vec::Zero(kShapeDim));
    std::vector<double> out;
    out.reserve(model.edges.size());
    for (const Edge& e : model.edges) out.push_back((rest.row(e.child) - rest.row(e.parent)).norm());
    return out;
}

FkResult forward_kinematics(const KinematicTree& tree, std::span<const Rotation> local, const Points& rest) {
    const int n = tree.size();
    require(static_cast<int>(local.size()) == n && rest.rows() == n, ErrorKind::shape_mismatch,
            "forward_kinematics: joint count mismatch");
    FkResult out;
    out.joints.resize(n, 3);
    out.rotations.assign(n, Mat3::Identity());
    for (int j : tree.order()) {
        const int p = tree.parent(j);
        if (p < 0) {
            out.rotations[j] = local[j].matrix();
            out.joints.row(j) = rest.row(j);
            continue;
        }
        const Vec3 offset = rest.row(j).transpose() - rest.row(p).transpose();
        out.joints.row(j) = out.joints.row(p) + (out.rotations[p] * offset).transpose();
        out.rotations[j] = out.rotations[p] * local[j].matrix();
    }
    return out;
}

FkResult forward_kinematics(const MiniBodyModel& model, const Vec& theta, const Points& rest) {
    require(theta.size() == 3 * model.joint_count(), ErrorKind::shape_mismatch, "theta must have 72 entries");
    const auto local = rotations_from_theta(theta);
    return forward_kinematics(model.tree(), local, rest);
}

Points skin_vertices(const MiniBodyModel& model, const FkResult& fk, const Points& rest, const Points& shaped) {
    const int v_count = model.vertex_count();
    Points out = Points::Zero(v_count, 3);
    for (int v = 0; v < v_count; ++v) {
        const Vec3 x = shaped.row(v).transpose();
        Vec3 acc = Vec3::Zero();
        for (int j = 0; j < model.joint_count(); ++j) {
            const double w = model.skin_weights(v, j);
            if (w == 0.0) continue;
            acc += w * (fk.rotations[j] * (x - rest.row(j).transpose()) + fk.joints.row(j).transpose());
        }
        out.row(v) = acc.transpose();
    }
    return out;
}

Points skin_mesh(const MiniBodyModel& model, std::span<const Rotation> local, const Vec& beta) {
    const Points shaped = shaped_vertices(model, beta);
    const Points rest = model.joint_regressor * shaped;
    const FkResult fk = forward_kinematics(model.tree(), local, rest);
    return skin_vertices(model, fk, rest, shaped);
}

Points skin_mesh(const MiniBodyModel& model, const Vec& theta, const Vec& beta) {
    require(theta.size() == 3 * model.joint_count(), ErrorKind::shape_mismatch, "theta must have 72 entries");
    const auto local = rotations_from_theta(theta);
    return skin_mesh(model, local, beta);
}

BodyGradients body_backward(const MiniBodyModel& model, std::span<const Rotation> local, const Vec& beta,
                            const Points& grad_joints, const Points* grad_vertices) {
    const int k = model.joint_count();
    const int v_count = model.vertex_count();
    const KinematicTree tree = model.tree();
    const Points shaped = shaped_vertices(model, beta);
    const Points rest = model.joint_regressor * shaped;
    const FkResult fk = forward_kinematics(tree, local, rest);

    std::vector<Mat3> g_world(k, Mat3::Zero());
    Points g_joint = grad_joints;
    Points g_rest = Points::Zero(k, 3);
    Points g_shaped = Points::Zero(v_count, 3);

    if (grad_vertices != nullptr) {
        for (int v = 0; v < v_count; ++v) {
            const Vec3 gv = grad_vertices->row(v).transpose();
            const Vec3 x = shaped.row(v).transpose();
            for (int j = 0; j < k; ++j) {
                const double w = model.skin_weights(v, j);
                if (w == 0.0) continue;
                const Vec3 d = x - rest.row(j).transpose();
                g_world[j] += w * gv * d.transpose();
                g_joint.row(j) += w * gv.transpose();
                const Vec3 back = w * (fk.rotations[j].transpose() * gv);
                g_shaped.row(v) += back.transpose();
                g_rest.row(j) -= back.transpose();
            }
        }
    }

    BodyGradients out;
    out.local_rotations.assign(k, Mat3::Zero());
    const auto& order = tree.order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int j = *it;
        const int p = tree.parent(j);
        if (p < 0) {
            out.local_rotations[j] = g_world[j];
            g_rest.row(j) += g_joint.row(j);
            continue;
        }
        const Mat3& gp = fk.rotations[p];
        out.local_rotations[j] = gp.transpose() * g_world[j];
        g_world[p] += g_world[j] * local[j].matrix().transpose();
        const Vec3 gj = g_joint.row(j).transpose();
        const Vec3 offset = rest.row(j).transpose() - rest.row(p).transpose();
        g_joint.row(p) += gj.transpose();
        g_world[p] += gj * offset.transpose();
        const Vec3 back = gp.transpose() * gj;
        g_rest.row(j) += back.transpose();
        g_rest.row(p) -= back.transpose();
    }

    g_shaped += model.joint_regressor.transpose() * g_rest;
    const Mat g_flat = g_shaped;
    out.beta = model.shape_blend.transpose() * g_flat.reshaped<Eigen::RowMajor>();
    return out;
}

}  // namespace arts
