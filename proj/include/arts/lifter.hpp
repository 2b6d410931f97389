#pragma once

#include "arts/neural.hpp"
#include "arts/skeleton.hpp"

namespace arts::nn {

struct LifterConfig {
    int joints = 24;
    int frames = 16;
    int width = 256;  // C1
    int depth = 3;    // L1
    int heads = 8;
    int ffn_hidden = 512;
};

// One dual-stream block over T*K tokens laid out frame-major (row t*K + k).
// Output = spatial->temporal stream + temporal->spatial stream.
struct DualStreamBlock {
    int frames = 0;
    int joints = 0;
    AttentionBlock st_spatial;
    AttentionBlock st_temporal;
    AttentionBlock ts_temporal;
    AttentionBlock ts_spatial;

    static DualStreamBlock init(int frames, int joints, int width, int heads, int ffn_hidden, Rng& rng);

    struct Cache {
        std::vector<AttentionBlock::Cache> st_spatial, st_temporal, ts_temporal, ts_spatial;
    };
    Mat forward(const Mat& x) const;
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& dy, DualStreamBlock& grad) const;
};

// 2D-to-3D skeleton lifter: embed, add spatial/temporal embeddings before every
// dual-stream block, project to 3D.
struct Lifter {
    int frames = 0;
    int joints = 0;
    Dense embed;
    Mat pe_spatial;   // K x C1
    Mat pe_temporal;  // T x C1
    std::vector<DualStreamBlock> blocks;
    Dense head;

    static Lifter init(const LifterConfig& config, Rng& rng);

    struct Cache {
        Dense::Cache embed;
        std::vector<DualStreamBlock::Cache> blocks;
        Dense::Cache head;
    };
    // x: (T*K) x 2 tokens; returns (T*K) x 3.
    Mat forward(const Mat& x) const;
    Mat forward(const Mat& x, Cache& cache) const;
    Mat backward(const Cache& cache, const Mat& dy, Lifter& grad) const;

    SkeletonSequence lift(const PointSequence& projected_2d) const;
};

// Orthographic camera along z: keeps (x, y) of every joint, frame-major tokens.
Mat orthographic_tokens(const SkeletonSequence& seq);
Mat skeleton_tokens(const SkeletonSequence& seq);
SkeletonSequence tokens_to_skeleton(const Mat& tokens, int frames, int joints);

template <class B, class F>
    requires ModuleOf<B, DualStreamBlock>
void visit_params(B& b, const std::string& prefix, F&& f) {
    visit_params(b.st_spatial, prefix + "st_spatial.", f);
    visit_params(b.st_temporal, prefix + "st_temporal.", f);
    visit_params(b.ts_temporal, prefix + "ts_temporal.", f);
    visit_params(b.ts_spatial, prefix + "ts_spatial.", f);
}

template <class L, class F>
    requires ModuleOf<L, Lifter>
void visit_params(L& l, const std::string& prefix, F&& f) {
    visit_params(l.embed, prefix + "embed.", f);
    f(prefix + "pe_spatial", l.pe_spatial);
    f(prefix + "pe_temporal", l.pe_temporal);
    for (size_t i = 0; i < l.blocks.size(); ++i) visit_params(l.blocks[i], prefix + "block" + std::to_string(i) + ".", f);
    visit_params(l.head, prefix + "head.", f);
}

}  // namespace arts::nn
