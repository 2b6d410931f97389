#pragma once

#include <span>
#include <vector>

#include "arts/body_model.hpp"
#include "arts/types.hpp"

namespace arts {

// T frames of K joints, meters.
struct SkeletonSequence {
    PointSequence frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
    int joint_count() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }
};

// Joint positions J, motion M and temporally averaged bone lengths B.
struct DisentangledRepr {
    PointSequence joints;
    PointSequence motion;  // row 0 is the mean of rows 1..T-1
    std::vector<double> bone_lengths;
    std::vector<Edge> edges;
};

// Motion in meters/frame: M_t = S_t - S_{t-1} for t >= 1, M_0 = mean of those.
PointSequence compute_motion(const SkeletonSequence& seq);
std::vector<double> compute_bone_lengths(const SkeletonSequence& seq, std::span<const Edge> edges);
DisentangledRepr disentangle(const SkeletonSequence& seq, std::span<const Edge> edges);

}  // namespace arts
