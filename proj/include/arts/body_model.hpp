#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "arts/rotations.hpp"
#include "arts/types.hpp"

namespace arts {

inline constexpr int kJointCount = 24;
inline constexpr int kPoseDim = 3 * kJointCount;
inline constexpr int kShapeDim = 10;

// SMPL joint hierarchy: pelvis root, three spine joints, neck/head, collar-arm
// chains and hip-leg chains.
inline constexpr int kSmplParents[kJointCount] = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
                                                  9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};

struct Edge {
    int parent;
    int child;
};

// Parent/child structure of a joint hierarchy rooted at joint 0.
class KinematicTree {
public:
    explicit KinematicTree(std::vector<int> parents);

    int size() const { return static_cast<int>(parents_.size()); }
    int parent(int j) const { return parents_[j]; }
    const std::vector<int>& parents() const { return parents_; }
    const std::vector<int>& children(int j) const { return children_[j]; }
    // One edge per non-root joint, ordered by child index.
    const std::vector<Edge>& edges() const { return edges_; }
    // Parents precede children.
    const std::vector<int>& order() const { return order_; }

    // Axis about which joint j twists: the rest direction towards its first
    // child, or from its parent for leaves.
    Vec3 twist_axis(const Points& rest, int j) const;

private:
    std::vector<int> parents_;
    std::vector<std::vector<int>> children_;
    std::vector<Edge> edges_;
    std::vector<int> order_;
};

struct MiniBodyModel {
    Points template_vertices;    // V x 3, meters
    Mat shape_blend;             // 3V x 10, row 3*v + axis
    Mat joint_regressor;         // K x V, rows sum to 1
    std::vector<int> parents;    // parents[0] == -1
    Mat skin_weights;            // V x K, rows sum to 1
    std::vector<Edge> edges;

    int vertex_count() const { return static_cast<int>(template_vertices.rows()); }
    int joint_count() const { return static_cast<int>(parents.size()); }
    KinematicTree tree() const { return KinematicTree(parents); }
};

// Pose as 24 axis-angle triples plus 10 shape coefficients.
struct BodyParams {
    Vec theta = Vec::Zero(kPoseDim);
    Vec beta = Vec::Zero(kShapeDim);
};

std::vector<Rotation> rotations_from_theta(const Vec& theta);
Vec theta_from_rotations(std::span<const Rotation> rotations);

// Procedurally generated humanoid model; deterministic in `seed`.
// Requires vertex_count >= 4 * 24.
MiniBodyModel build_synthetic_model(std::uint64_t seed, int vertex_count);

// Checks every MiniBodyModel invariant; throws on the first violation.
void validate_model(const MiniBodyModel& model);

Points shaped_vertices(const MiniBodyModel& model, const Vec& beta);
Points rest_joints(const MiniBodyModel& model, const Vec& beta);
Points regress_joints(const MiniBodyModel& model, const Points& vertices);

// (3K) x 10 map from shape coefficients to rest-joint offsets (row 3*k + axis).
Mat composed_joint_map(const MiniBodyModel& model);

std::vector<double> template_bone_lengths(const MiniBodyModel& model);

struct FkResult {
    Points joints;                  // posed joint positions
    std::vector<Mat3> rotations;    // world rotation of each joint frame
    // Joint j's world transform maps x to rotations[j] * (x - rest_j) + joints[j].
};

FkResult forward_kinematics(const KinematicTree& tree, std::span<const Rotation> local, const Points& rest);
FkResult forward_kinematics(const MiniBodyModel& model, const Vec& theta, const Points& rest);

Points skin_vertices(const MiniBodyModel& model, const FkResult& fk, const Points& rest,
                     const Points& shaped);
Points skin_mesh(const MiniBodyModel& model, std::span<const Rotation> local, const Vec& beta);
Points skin_mesh(const MiniBodyModel& model, const Vec& theta, const Vec& beta);

// Reverse-mode derivatives of posed joints / skinned vertices with respect to
// local joint rotations and shape coefficients.
struct BodyGradients {
    std::vector<Mat3> local_rotations;  // dL/dR_j
    Vec beta;                           // dL/dbeta
};

BodyGradients body_backward(const MiniBodyModel& model, std::span<const Rotation> local, const Vec& beta,
                            const Points& grad_joints, const Points* grad_vertices);

}  // namespace arts
