#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "arts/body_model.hpp"
#include "arts/neural.hpp"
#include "arts/skeleton.hpp"

namespace arts {

inline constexpr int kFeatureWidth = 2048;
inline constexpr int kTwistCount = kJointCount - 1;

struct RegressorConfig {
    int frames = 16;               // T
    int feature_width = kFeatureWidth;
    int width = 512;               // C2
    int depth = 1;                 // L2
    int heads = 8;
    // 0 selects twice the layer's input width.
    int twist_hidden = 0;
    int refine_hidden = 0;
    int ffn_hidden = 0;
};

// Per-frame image-like features, T x feature_width.
struct FeatureSequence {
    Mat values;

    int frame_count() const { return static_cast<int>(values.rows()); }
    int width() const { return static_cast<int>(values.cols()); }
};

// Desk-scale stand-in for a CNN backbone: a fixed random projection of each
// frame's root-relative joints and, when given, its local joint rotations
// (6D), plus seeded Gaussian noise.
FeatureSequence synth_features(const SkeletonSequence& seq, std::uint64_t seed, int width = kFeatureWidth,
                               const std::vector<std::vector<Rotation>>* local_rotations = nullptr);

// ---- network modules ----

struct SwingTwistHeads {
    nn::Mlp swing;  // K*3 root-relative joints -> K x 6
    nn::Mlp twist;  // features -> (K-1) x (cos, sin)
};

struct TemporalIk {
    SwingTwistHeads heads;
    nn::Mlp fuse;                  // concat[swing, twist] -> C2
    nn::AttentionBlock attention;  // self-attention over frames
    nn::Mlp pose_head;             // C2 -> K x 6
};

// Analytical-MLP: beta = project(lift(J_aligned)), lift ~ W^+, project ~ S^+.
struct ShapeFitting {
    nn::Dense lift;
    nn::Dense project;
};

struct MotionRefinement {
    nn::Dense query;    // motion (K*3) -> C2
    nn::Dense memory;   // features -> C2
    std::vector<nn::AttentionBlock> layers;
    nn::Dense expand;   // C2 -> feature width (F')
    nn::Mlp pose_head;  // [F', rot6d(theta_init), beta_init] -> K*3 axis-angle residual
    nn::Mlp shape_head; // same input -> 10
};

struct Regressor {
    RegressorConfig config;
    TemporalIk tik;
    ShapeFitting bsf;
    MotionRefinement mcr;

    // Random heads, analytical-MLP from the model, zero-initialized refinement outputs.
    static Regressor init(const RegressorConfig& config, const MiniBodyModel& model, std::uint64_t seed);
};

struct RegressorOutput {
    Vec theta_init;
    Vec beta_init;
    Vec theta_refined;
    Vec beta_refined;
    Vec motion_features;  // F'
    std::vector<Rotation> rotations_init;
    std::vector<Rotation> rotations_refined;
};

// ---- temporal inverse kinematics ----

int mid_frame(int frames);

// Root-relative joints, one flattened frame per row.
Mat joint_rows(const PointSequence& joints);
Mat motion_rows(const PointSequence& motion);

// Normalizes each (cos, sin) pair of a twist head output row-wise.
Mat normalize_twist(const Mat& raw);

// Decodes one row of K 6D blocks into rotations.
std::vector<Rotation> decode_rot6d_row(const Mat& row);
Mat encode_rot6d_row(std::span<const Rotation> rotations);

std::vector<Rotation> tik_rotations(const TemporalIk& tik, const DisentangledRepr& repr, const FeatureSequence& feats);
Vec tik_forward(const TemporalIk& tik, const DisentangledRepr& repr, const FeatureSequence& feats);

// ---- bone-guided shape fitting ----

// Places each child at parent + B * unit(rest offset), parents first.
Points bsf_align(std::span<const double> bone_lengths, const Points& mean_joints, const KinematicTree& tree);

// Least-squares solve of A beta = vec(J_aligned - rest_joints(0)), A the
// composed joint map.
Vec bsf_analytic_beta(const Points& aligned, const MiniBodyModel& model);

// Literal chain S^+ (W^+ J_aligned - T), minimum-norm pseudo-inverses.
Vec bsf_chained_beta(const Points& aligned, const MiniBodyModel& model);

ShapeFitting bsf_mlp_init(const MiniBodyModel& model);
Vec bsf_apply(const ShapeFitting& bsf, const Points& aligned);
Vec bsf_forward(const ShapeFitting& bsf, const DisentangledRepr& repr, const MiniBodyModel& model);

// Largest |composed - chained| over random shaped rest skeletons with noise.
struct ShapeRouteComparison {
    double max_abs_difference = 0.0;
    double mean_abs_difference = 0.0;
};
ShapeRouteComparison compare_shape_routes(const MiniBodyModel& model, int samples, std::uint64_t seed,
                                          double joint_noise = 0.0);

// ---- motion-centric refinement ----

struct RefinementOutput {
    Vec theta;
    Vec beta;
    Vec motion_features;
    std::vector<Rotation> rotations;
};

RefinementOutput mcr_forward(const MotionRefinement& mcr, const PointSequence& motion, const FeatureSequence& feats,
                             std::span<const Rotation> rotations_init, const Vec& beta_init);

// ---- loss ----

struct LossWeights {
    double mesh = 1.0;
    double joint = 1.0;
    double pose = 0.06;
    double shape = 0.06;
};

struct LossTensors {
    Mat mesh;
    Mat joints;
    Mat pose;
    Mat shape;
};

struct LossBreakdown {
    double mesh = 0.0;
    double joint = 0.0;
    double pose = 0.0;
    double shape = 0.0;
    double total = 0.0;
};

// Weighted sum of per-tensor mean squared errors.
LossBreakdown total_loss(const LossTensors& pred, const LossTensors& gt, const LossWeights& weights = {});

// ---- full pipeline ----

// Intermediate values of one regressor pass, kept for the backward pass.
struct RegressorTrace {
    DisentangledRepr repr;
    int mid = 0;
    // TIK
    nn::Mlp::Cache swing, twist, fuse, pose_head;
    nn::AttentionBlock::Cache attention;
    Mat swing_out;    // T x 6K
    Mat twist_raw;    // T x 2(K-1)
    Mat twist_unit;   // pairs normalized
    Mat pose_out;     // 1 x 6K
    // BSF
    nn::Dense::Cache lift, project;
    // MCR
    nn::Dense::Cache query, memory, expand;
    std::vector<nn::AttentionBlock::Cache> layers;
    nn::Mlp::Cache refine_pose, refine_shape;
    Vec delta;  // axis-angle residual per joint
};

// Runs TIK, BSF and MCR on one window. `trace` may be null.
RegressorOutput regress(const Regressor& net, const DisentangledRepr& repr, const FeatureSequence& feats,
                        const MiniBodyModel& model, RegressorTrace* trace = nullptr);

struct FitResult {
    RegressorOutput params;
    Points joints;  // posed skeleton of the refined parameters
    Points mesh;
};

// Disentangle -> TIK -> BSF -> MCR -> skinning; mid-frame output.
FitResult fit_sequence(const Regressor& net, const SkeletonSequence& seq, const FeatureSequence& feats,
                       const MiniBodyModel& model);

// Frame indices of the T-frame window whose mid frame is `center`, clamped
// to [0, length).
std::vector<int> window_indices(int center, int frames, int length);

// One prediction per frame using clamped sliding windows.
std::vector<FitResult> fit_all_frames(const Regressor& net, const SkeletonSequence& seq, const FeatureSequence& feats,
                                      const MiniBodyModel& model);

// Per-frame analytic IK baseline: analytic swings from each frame's joints,
// twist from the learned twist head, shape from the analytical-MLP.
std::vector<FitResult> frame_ik_all_frames(const Regressor& net, const SkeletonSequence& seq,
                                           const FeatureSequence& feats, const MiniBodyModel& model);

// ---- parameter traversal ----

template <class H, class F>
    requires nn::ModuleOf<H, SwingTwistHeads>
void visit_params(H& h, const std::string& prefix, F&& f) {
    visit_params(h.swing, prefix + "swing.", f);
    visit_params(h.twist, prefix + "twist.", f);
}

template <class T, class F>
    requires nn::ModuleOf<T, TemporalIk>
void visit_params(T& t, const std::string& prefix, F&& f) {
    visit_params(t.heads, prefix + "heads.", f);
    visit_params(t.fuse, prefix + "fuse.", f);
    visit_params(t.attention, prefix + "attention.", f);
    visit_params(t.pose_head, prefix + "pose_head.", f);
}

template <class S, class F>
    requires nn::ModuleOf<S, ShapeFitting>
void visit_params(S& s, const std::string& prefix, F&& f) {
    visit_params(s.lift, prefix + "lift.", f);
    visit_params(s.project, prefix + "project.", f);
}

template <class M, class F>
    requires nn::ModuleOf<M, MotionRefinement>
void visit_params(M& m, const std::string& prefix, F&& f) {
    visit_params(m.query, prefix + "query.", f);
    visit_params(m.memory, prefix + "memory.", f);
    for (size_t i = 0; i < m.layers.size(); ++i) visit_params(m.layers[i], prefix + "layer" + std::to_string(i) + ".", f);
    visit_params(m.expand, prefix + "expand.", f);
    visit_params(m.pose_head, prefix + "pose_head.", f);
    visit_params(m.shape_head, prefix + "shape_head.", f);
}

template <class R, class F>
    requires nn::ModuleOf<R, Regressor>
void visit_params(R& r, const std::string& prefix, F&& f) {
    visit_params(r.tik, prefix + "tik.", f);
    visit_params(r.bsf, prefix + "bsf.", f);
    visit_params(r.mcr, prefix + "mcr.", f);
}

}  // namespace arts
