#include "arts/skeleton.hpp"

#include <string>

#include "arts/error.hpp"

namespace arts {

namespace {

void check_frames(const SkeletonSequence& seq) {
    const int k = seq.joint_count();
    for (const Points& f : seq.frames) {
        require(f.rows() == k, ErrorKind::shape_mismatch, "skeleton frames have differing joint counts");
        require(f.allFinite(), ErrorKind::invalid_argument, "skeleton contains non-finite coordinates");
    }
}

}  // namespace

PointSequence compute_motion(const SkeletonSequence& seq) {
    const int t_count = seq.frame_count();
    require(t_count >= 2, ErrorKind::invalid_argument, "motion needs at least 2 frames");
    check_frames(seq);
    PointSequence motion(t_count);
    Points sum = Points::Zero(seq.joint_count(), 3);
    for (int t = 1; t < t_count; ++t) {
        motion[t] = seq.frames[t] - seq.frames[t - 1];
        sum += motion[t];
    }
    motion[0] = sum / static_cast<double>(t_count - 1);
    return motion;
}

std::vector<double> compute_bone_lengths(const SkeletonSequence& seq, std::span<const Edge> edges) {
    const int t_count = seq.frame_count();
    require(t_count >= 1, ErrorKind::invalid_argument, "bone lengths need at least 1 frame");
    check_frames(seq);
    const int k = seq.joint_count();
    std::vector<double> out;
    out.reserve(edges.size());
    for (const Edge& e : edges) {
        require(e.parent >= 0 && e.parent < k && e.child >= 0 && e.child < k, ErrorKind::invalid_argument,
                "edge (" + std::to_string(e.parent) + ", " + std::to_string(e.child) + ") out of range");
        double sum = 0.0;
        for (const Points& f : seq.frames) sum += (f.row(e.parent) - f.row(e.child)).norm();
        out.push_back(sum / t_count);
    }
    return out;
}

DisentangledRepr disentangle(const SkeletonSequence& seq, std::span<const Edge> edges) {
    DisentangledRepr out;
    out.motion = compute_motion(seq);
    out.bone_lengths = compute_bone_lengths(seq, edges);
    out.joints = seq.frames;
    out.edges.assign(edges.begin(), edges.end());
    return out;
}

}  // namespace arts
