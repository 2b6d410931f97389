#pragma once

#include <span>
#include <vector>

#include "arts/body_model.hpp"
#include "arts/rotations.hpp"

namespace arts {

// Closed-form inverse kinematics along the tree. For every joint (parents
// first) the observed child offsets are expressed in the parent's frame:
//   - one child:   swing = minimal rotation from the rest offset,
//   - >= 2 children: best-fit rotation of all child directions (for the root
//                  this is the full rotation, otherwise its swing part),
//   - leaf:        swing = identity.
// The local rotation is swing * about(twist_axis, twist), with the twist taken
// from `twist_angles` (size K, entry 0 unused; empty means all zero).
struct IkSolution {
    std::vector<Rotation> swings;
    std::vector<Rotation> local;
};

IkSolution analytic_ik(const Points& joints, const Points& rest, const KinematicTree& tree,
                       std::span<const double> twist_angles = {});

// Parent-relative swing rotations under zero twist.
std::vector<Rotation> analytic_swing(const Points& joints, const Points& rest, const KinematicTree& tree);

// Twist of every local rotation about its joint's rest twist axis (entry 0 is 0).
std::vector<double> twist_targets(std::span<const Rotation> local, const Points& rest, const KinematicTree& tree);

}  // namespace arts
