#include "arts/lifter.hpp"

#include <cmath>

#include "arts/error.hpp"

namespace arts::nn {

namespace {

// Row indices of one attention group: all joints of a frame (spatial) or all
// frames of a joint (temporal).
std::vector<Eigen::Index> group_rows(int frames, int joints, bool spatial, int g) {
    std::vector<Eigen::Index> rows;
    if (spatial) {
        for (int k = 0; k < joints; ++k) rows.push_back(static_cast<Eigen::Index>(g) * joints + k);
    } else {
        for (int t = 0; t < frames; ++t) rows.push_back(static_cast<Eigen::Index>(t) * joints + g);
    }
    return rows;
}

Mat run_grouped(const AttentionBlock& block, const Mat& x, int frames, int joints, bool spatial,
                std::vector<AttentionBlock::Cache>* caches) {
    const int groups = spatial ? frames : joints;
    if (caches != nullptr) caches->resize(groups);
    Mat out(x.rows(), x.cols());
    for (int g = 0; g < groups; ++g) {
        const auto rows = group_rows(frames, joints, spatial, g);
        const Mat in = x(rows, Eigen::all);
        out(rows, Eigen::all) = caches != nullptr ? block.forward(in, (*caches)[g]) : block.forward(in);
    }
    return out;
}

Mat back_grouped(const AttentionBlock& block, const Mat& dy, int frames, int joints, bool spatial,
                 const std::vector<AttentionBlock::Cache>& caches, AttentionBlock& grad) {
    const int groups = spatial ? frames : joints;
    Mat dx(dy.rows(), dy.cols());
    for (int g = 0; g < groups; ++g) {
        const auto rows = group_rows(frames, joints, spatial, g);
        const Mat d = dy(rows, Eigen::all);
        dx(rows, Eigen::all) = block.backward(caches[g], d, grad);
    }
    return dx;
}

}  // namespace

DualStreamBlock DualStreamBlock::init(int frames, int joints, int width, int heads, int ffn_hidden, Rng& rng) {
    DualStreamBlock b;
    b.frames = frames;
    b.joints = joints;
    b.st_spatial = AttentionBlock::init(width, heads, ffn_hidden, rng);
    b.st_temporal = AttentionBlock::init(width, heads, ffn_hidden, rng);
    b.ts_temporal = AttentionBlock::init(width, heads, ffn_hidden, rng);
    b.ts_spatial = AttentionBlock::init(width, heads, ffn_hidden, rng);
    return b;
}

Mat DualStreamBlock::forward(const Mat& x) const {
    require(x.rows() == static_cast<Eigen::Index>(frames) * joints, ErrorKind::shape_mismatch,
            "dual-stream block: token count must be T*K");
    const Mat st = run_grouped(st_temporal, run_grouped(st_spatial, x, frames, joints, true, nullptr), frames,
                               joints, false, nullptr);
    const Mat ts = run_grouped(ts_spatial, run_grouped(ts_temporal, x, frames, joints, false, nullptr), frames,
                               joints, true, nullptr);
    return st + ts;
}

Mat DualStreamBlock::forward(const Mat& x, Cache& cache) const {
    require(x.rows() == static_cast<Eigen::Index>(frames) * joints, ErrorKind::shape_mismatch,
            "dual-stream block: token count must be T*K");
    const Mat s1 = run_grouped(st_spatial, x, frames, joints, true, &cache.st_spatial);
    const Mat st = run_grouped(st_temporal, s1, frames, joints, false, &cache.st_temporal);
    const Mat t1 = run_grouped(ts_temporal, x, frames, joints, false, &cache.ts_temporal);
    const Mat ts = run_grouped(ts_spatial, t1, frames, joints, true, &cache.ts_spatial);
    return st + ts;
}

Mat DualStreamBlock::backward(const Cache& cache, const Mat& dy, DualStreamBlock& grad) const {
    const Mat ds1 = back_grouped(st_temporal, dy, frames, joints, false, cache.st_temporal, grad.st_temporal);
    const Mat dx_st = back_grouped(st_spatial, ds1, frames, joints, true, cache.st_spatial, grad.st_spatial);
    const Mat dt1 = back_grouped(ts_spatial, dy, frames, joints, true, cache.ts_spatial, grad.ts_spatial);
    const Mat dx_ts = back_grouped(ts_temporal, dt1, frames, joints, false, cache.ts_temporal, grad.ts_temporal);
    return dx_st + dx_ts;
}

Lifter Lifter::init(const LifterConfig& config, Rng& rng) {
    require(config.frames > 0 && config.joints > 0 && config.width > 0 && config.depth > 0, ErrorKind::invalid_argument,
            "lifter: sizes must be positive");
    Lifter l;
    l.frames = config.frames;
    l.joints = config.joints;
    l.embed = Dense::init(2, config.width, Activation::identity, rng);
    l.pe_spatial = random_matrix(config.joints, config.width, rng, 0.02);
    l.pe_temporal = random_matrix(config.frames, config.width, rng, 0.02);
    for (int i = 0; i < config.depth; ++i) {
        l.blocks.push_back(
            DualStreamBlock::init(config.frames, config.joints, config.width, config.heads, config.ffn_hidden, rng));
    }
    l.head = Dense::init(config.width, 3, Activation::identity, rng);
    return l;
}

namespace {

Mat add_embeddings(const Mat& x, const Mat& pe_spatial, const Mat& pe_temporal, int frames, int joints) {
    Mat z = x;
    for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < joints; ++k) {
            z.row(static_cast<Eigen::Index>(t) * joints + k) += pe_spatial.row(k) + pe_temporal.row(t);
        }
    }
    return z;
}

}  // namespace

Mat Lifter::forward(const Mat& x) const {
    require(x.rows() == static_cast<Eigen::Index>(frames) * joints && x.cols() == 2, ErrorKind::shape_mismatch,
            "lifter: expected (T*K) x 2 input");
    Mat h = embed.forward(x);
    for (const DualStreamBlock& b : blocks) h = b.forward(add_embeddings(h, pe_spatial, pe_temporal, frames, joints));
    return head.forward(h);
}

Mat Lifter::forward(const Mat& x, Cache& cache) const {
    require(x.rows() == static_cast<Eigen::Index>(frames) * joints && x.cols() == 2, ErrorKind::shape_mismatch,
            "lifter: expected (T*K) x 2 input");
    Mat h = embed.forward(x, cache.embed);
    cache.blocks.resize(blocks.size());
    for (size_t i = 0; i < blocks.size(); ++i) {
        h = blocks[i].forward(add_embeddings(h, pe_spatial, pe_temporal, frames, joints), cache.blocks[i]);
    }
    return head.forward(h, cache.head);
}

Mat Lifter::backward(const Cache& cache, const Mat& dy, Lifter& grad) const {
    Mat d = head.backward(cache.head, dy, grad.head);
    for (size_t i = blocks.size(); i-- > 0;) {
        d = blocks[i].backward(cache.blocks[i], d, grad.blocks[i]);
        for (int t = 0; t < frames; ++t) {
            for (int k = 0; k < joints; ++k) {
                const auto row = d.row(static_cast<Eigen::Index>(t) * joints + k);
                grad.pe_spatial.row(k) += row;
                grad.pe_temporal.row(t) += row;
            }
        }
    }
    return embed.backward(cache.embed, d, grad.embed);
}

Mat orthographic_tokens(const SkeletonSequence& seq) {
    const int t_count = seq.frame_count();
    const int k = seq.joint_count();
    Mat out(static_cast<Eigen::Index>(t_count) * k, 2);
    for (int t = 0; t < t_count; ++t) out.middleRows(static_cast<Eigen::Index>(t) * k, k) = seq.frames[t].leftCols(2);
    return out;
}

Mat skeleton_tokens(const SkeletonSequence& seq) {
    const int t_count = seq.frame_count();
    const int k = seq.joint_count();
    Mat out(static_cast<Eigen::Index>(t_count) * k, 3);
    for (int t = 0; t < t_count; ++t) out.middleRows(static_cast<Eigen::Index>(t) * k, k) = seq.frames[t];
    return out;
}

SkeletonSequence tokens_to_skeleton(const Mat& tokens, int frames, int joints) {
    require(tokens.rows() == static_cast<Eigen::Index>(frames) * joints && tokens.cols() == 3,
            ErrorKind::shape_mismatch, "tokens_to_skeleton: shape mismatch");
    SkeletonSequence seq;
    for (int t = 0; t < frames; ++t) seq.frames.push_back(tokens.middleRows(static_cast<Eigen::Index>(t) * joints, joints));
    return seq;
}

SkeletonSequence Lifter::lift(const PointSequence& projected_2d) const {
    require(static_cast<int>(projected_2d.size()) == frames, ErrorKind::shape_mismatch, "lifter: frame count mismatch");
    Mat x(static_cast<Eigen::Index>(frames) * joints, 2);
    for (int t = 0; t < frames; ++t) {
        require(projected_2d[t].rows() == joints, ErrorKind::shape_mismatch, "lifter: joint count mismatch");
        x.middleRows(static_cast<Eigen::Index>(t) * joints, joints) = projected_2d[t].leftCols(2);
    }
    return tokens_to_skeleton(forward(x), frames, joints);
}

}  // namespace arts::nn
