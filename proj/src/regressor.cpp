#include "arts/regressor.hpp"

#include <algorithm>
#include <cmath>

#include "arts/error.hpp"
#include "arts/kinematics.hpp"
#include "arts/linalg.hpp"
#include "arts/random.hpp"

namespace arts {

namespace {

// Fixed seed for the feature projection, so every dataset shares one "backbone".
constexpr std::uint64_t kProjectionSeed = 0x5eedf00dULL;
constexpr double kJointFeatureScale = 4.0;
constexpr double kFeatureNoise = 0.01;

Mat flatten_points(const Points& p) { return p.reshaped<Eigen::RowMajor>().transpose(); }

void check_window(const DisentangledRepr& repr, const FeatureSequence& feats) {
    require(repr.joints.size() >= 2, ErrorKind::invalid_argument, "regressor: at least 2 frames are required");
    require(feats.frame_count() == static_cast<int>(repr.joints.size()), ErrorKind::shape_mismatch,
            "regressor: feature and skeleton frame counts differ");
    for (const Points& f : repr.joints) {
        require(f.rows() == kJointCount, ErrorKind::shape_mismatch, "regressor: expected 24 joints per frame");
    }
}

}  // namespace

FeatureSequence synth_features(const SkeletonSequence& seq, std::uint64_t seed, int width,
                               const std::vector<std::vector<Rotation>>* local_rotations) {
    require(width > 0, ErrorKind::invalid_argument, "synth_features: width must be positive");
    const int t_count = seq.frame_count();
    const int k = seq.joint_count();
    require(local_rotations == nullptr || static_cast<int>(local_rotations->size()) == t_count,
            ErrorKind::shape_mismatch, "synth_features: rotation frame count mismatch");
    const int in = 3 * k + 6 * k;

    Rng proj_rng(kProjectionSeed ^ static_cast<std::uint64_t>(width) * 0x9e3779b97f4a7c15ULL);
    Mat projection(in, width);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = proj_rng.normal() * scale;

    Mat x = Mat::Zero(t_count, in);
    for (int t = 0; t < t_count; ++t) {
        const Points& f = seq.frames[t];
        for (int j = 0; j < k; ++j) {
            for (int a = 0; a < 3; ++a) x(t, 3 * j + a) = kJointFeatureScale * (f(j, a) - f(0, a));
        }
        if (local_rotations != nullptr) {
            const auto& rots = (*local_rotations)[t];
            require(static_cast<int>(rots.size()) == k, ErrorKind::shape_mismatch,
                    "synth_features: rotation joint count mismatch");
            for (int j = 0; j < k; ++j) {
                const Rot6D r = matrix_to_rot6d(rots[j]);
                for (int a = 0; a < 6; ++a) x(t, 3 * k + 6 * j + a) = r.values[a];
            }
        }
    }
    FeatureSequence out{x * projection};
    Rng noise(seed);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) out.values.data()[i] += kFeatureNoise * noise.normal();
    return out;
}

// ---- TIK ----

int mid_frame(int frames) { return frames / 2; }

Mat joint_rows(const PointSequence& joints) {
    Mat out(static_cast<Eigen::Index>(joints.size()), joints.empty() ? 0 : 3 * joints.front().rows());
    for (size_t t = 0; t < joints.size(); ++t) {
        const Points rel = joints[t].rowwise() - joints[t].row(0);
        out.row(static_cast<Eigen::Index>(t)) = flatten_points(rel);
    }
    return out;
}

Mat motion_rows(const PointSequence& motion) {
    Mat out(static_cast<Eigen::Index>(motion.size()), motion.empty() ? 0 : 3 * motion.front().rows());
    for (size_t t = 0; t < motion.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = flatten_points(motion[t]);
    return out;
}

Mat normalize_twist(const Mat& raw) {
    require(raw.cols() % 2 == 0, ErrorKind::shape_mismatch, "normalize_twist: odd column count");
    Mat out = raw;
    for (Eigen::Index r = 0; r < raw.rows(); ++r) {
        for (Eigen::Index c = 0; c < raw.cols(); c += 2) {
            const double n = std::max(std::hypot(raw(r, c), raw(r, c + 1)), 1e-9);
            out(r, c) /= n;
            out(r, c + 1) /= n;
        }
    }
    return out;
}

std::vector<Rotation> decode_rot6d_row(const Mat& row) {
    require(row.rows() == 1 && row.cols() % 6 == 0, ErrorKind::shape_mismatch, "decode_rot6d_row: bad shape");
    std::vector<Rotation> out;
    for (Eigen::Index j = 0; j < row.cols() / 6; ++j) {
        Rot6D r;
        for (int a = 0; a < 6; ++a) r.values[a] = row(0, 6 * j + a);
        out.push_back(rot6d_to_matrix(r));
    }
    return out;
}

Mat encode_rot6d_row(std::span<const Rotation> rotations) {
    Mat out(1, 6 * static_cast<Eigen::Index>(rotations.size()));
    for (size_t j = 0; j < rotations.size(); ++j) {
        const Rot6D r = matrix_to_rot6d(rotations[j]);
        for (int a = 0; a < 6; ++a) out(0, 6 * static_cast<Eigen::Index>(j) + a) = r.values[a];
    }
    return out;
}

namespace {

std::vector<Rotation> tik_impl(const TemporalIk& tik, const DisentangledRepr& repr, const FeatureSequence& feats,
                               RegressorTrace* tr) {
    check_window(repr, feats);
    const int t_count = static_cast<int>(repr.joints.size());
    const int mid = mid_frame(t_count);
    const Mat x = joint_rows(repr.joints);
    Mat fused_in(t_count, 6 * kJointCount + 2 * kTwistCount);
    Mat pose;
    if (tr != nullptr) {
        tr->mid = mid;
        tr->swing_out = tik.heads.swing.forward(x, tr->swing);
        tr->twist_raw = tik.heads.twist.forward(feats.values, tr->twist);
        tr->twist_unit = normalize_twist(tr->twist_raw);
        fused_in << tr->swing_out, tr->twist_unit;
        const Mat h = tik.attention.forward(tik.fuse.forward(fused_in, tr->fuse), tr->attention);
        tr->pose_out = tik.pose_head.forward(h.row(mid), tr->pose_head);
        pose = tr->pose_out;
    } else {
        fused_in << tik.heads.swing.forward(x), normalize_twist(tik.heads.twist.forward(feats.values));
        const Mat h = tik.attention.forward(tik.fuse.forward(fused_in));
        pose = tik.pose_head.forward(h.row(mid));
    }
    return decode_rot6d_row(pose);
}

}  // namespace

std::vector<Rotation> tik_rotations(const TemporalIk& tik, const DisentangledRepr& repr, const FeatureSequence& feats) {
    return tik_impl(tik, repr, feats, nullptr);
}

Vec tik_forward(const TemporalIk& tik, const DisentangledRepr& repr, const FeatureSequence& feats) {
    return theta_from_rotations(tik_rotations(tik, repr, feats));
}

// ---- BSF ----

Points bsf_align(std::span<const double> bone_lengths, const Points& mean_joints, const KinematicTree& tree) {
    require(mean_joints.rows() == tree.size(), ErrorKind::shape_mismatch, "bsf_align: joint count mismatch");
    require(static_cast<int>(bone_lengths.size()) == tree.size() - 1, ErrorKind::shape_mismatch,
            "bsf_align: one bone length per non-root joint is required");
    Points out = mean_joints;
    // Edges are ordered by child index; map child -> bone.
    std::vector<int> bone_of(tree.size(), -1);
    for (size_t i = 0; i < tree.edges().size(); ++i) bone_of[tree.edges()[i].child] = static_cast<int>(i);
    for (int j : tree.order()) {
        const int p = tree.parent(j);
        if (p < 0) continue;
        const double b = bone_lengths[bone_of[j]];
        require(b >= 0.0, ErrorKind::invalid_argument, "bsf_align: negative bone length");
        const Vec3 offset = mean_joints.row(j).transpose() - mean_joints.row(p).transpose();
        const double n = offset.norm();
        require(n > 1e-12, ErrorKind::degenerate, "bsf_align: zero-length rest bone at joint " + std::to_string(j));
        out.row(j) = out.row(p) + (b / n) * offset.transpose();
    }
    return out;
}

Vec bsf_analytic_beta(const Points& aligned, const MiniBodyModel& model) {
    require(aligned.rows() == model.joint_count(), ErrorKind::shape_mismatch, "bsf_analytic_beta: joint count mismatch");
    const Mat a = composed_joint_map(model);
    require(linalg::rank(a) == a.cols(), ErrorKind::degenerate, "bsf_analytic_beta: composed joint map is rank deficient");
    const Points offset = aligned - rest_joints(model, Vec::Zero(kShapeDim));
    const Vec b = offset.reshaped<Eigen::RowMajor>();
    return a.colPivHouseholderQr().solve(b);
}

Vec bsf_chained_beta(const Points& aligned, const MiniBodyModel& model) {
    require(aligned.rows() == model.joint_count(), ErrorKind::shape_mismatch, "bsf_chained_beta: joint count mismatch");
    const Points lifted = linalg::pseudo_inverse(model.joint_regressor) * aligned;  // V x 3
    const Vec mesh_offset = (lifted - model.template_vertices).reshaped<Eigen::RowMajor>();
    return linalg::pseudo_inverse(model.shape_blend) * mesh_offset;
}

ShapeFitting bsf_mlp_init(const MiniBodyModel& model) {
    const int v = model.vertex_count();
    const int k = model.joint_count();
    const Mat w_pinv = linalg::pseudo_inverse(model.joint_regressor);  // V x K
    const Mat s_pinv = linalg::pseudo_inverse(model.shape_blend);      // 10 x 3V

    // Row-major flattening: joint k axis a sits at column 3k + a, vertex v axis a at 3v + a.
    Mat lift = Mat::Zero(3 * v, 3 * k);
    for (int i = 0; i < v; ++i) {
        for (int j = 0; j < k; ++j) {
            for (int a = 0; a < 3; ++a) lift(3 * i + a, 3 * j + a) = w_pinv(i, j);
        }
    }
    const Vec template_flat = model.template_vertices.reshaped<Eigen::RowMajor>();
    ShapeFitting out;
    out.lift = nn::Dense{lift, Mat::Zero(1, 3 * v), nn::Activation::identity};
    out.project = nn::Dense{s_pinv, -(s_pinv * template_flat).transpose(), nn::Activation::identity};
    return out;
}

Vec bsf_apply(const ShapeFitting& bsf, const Points& aligned) {
    require(bsf.lift.in_features() == 3 * aligned.rows(), ErrorKind::shape_mismatch, "bsf_apply: joint count mismatch");
    return bsf.project.forward(bsf.lift.forward(flatten_points(aligned))).transpose();
}

Vec bsf_forward(const ShapeFitting& bsf, const DisentangledRepr& repr, const MiniBodyModel& model) {
    const Points aligned = bsf_align(repr.bone_lengths, rest_joints(model, Vec::Zero(kShapeDim)), model.tree());
    return bsf_apply(bsf, aligned);
}

ShapeRouteComparison compare_shape_routes(const MiniBodyModel& model, int samples, std::uint64_t seed,
                                          double joint_noise) {
    require(samples > 0, ErrorKind::invalid_argument, "compare_shape_routes: samples must be positive");
    Rng rng(seed);
    ShapeRouteComparison out;
    double total = 0.0;
    for (int s = 0; s < samples; ++s) {
        Vec beta(kShapeDim);
        for (int i = 0; i < kShapeDim; ++i) beta[i] = rng.uniform(-2.0, 2.0);
        Points joints = rest_joints(model, beta);
        for (Eigen::Index i = 0; i < joints.size(); ++i) joints.data()[i] += joint_noise * rng.normal();
        const Vec diff = bsf_analytic_beta(joints, model) - bsf_chained_beta(joints, model);
        out.max_abs_difference = std::max(out.max_abs_difference, diff.cwiseAbs().maxCoeff());
        total += diff.cwiseAbs().mean();
    }
    out.mean_abs_difference = total / samples;
    return out;
}

// ---- MCR ----

namespace {

RefinementOutput mcr_impl(const MotionRefinement& mcr, const PointSequence& motion, const FeatureSequence& feats,
                          std::span<const Rotation> rotations_init, const Vec& beta_init, RegressorTrace* tr) {
    require(motion.size() >= 2, ErrorKind::invalid_argument, "mcr_forward: at least 2 frames are required");
    require(feats.frame_count() == static_cast<int>(motion.size()), ErrorKind::shape_mismatch,
            "mcr_forward: feature and motion frame counts differ");
    require(static_cast<int>(rotations_init.size()) == kJointCount && beta_init.size() == kShapeDim,
            ErrorKind::shape_mismatch, "mcr_forward: initial parameter size mismatch");
    const int mid = mid_frame(static_cast<int>(motion.size()));
    const Mat m = motion_rows(motion);

    Mat q, mem;
    if (tr != nullptr) {
        q = mcr.query.forward(m, tr->query);
        mem = mcr.memory.forward(feats.values, tr->memory);
        tr->layers.resize(mcr.layers.size());
        for (size_t i = 0; i < mcr.layers.size(); ++i) q = mcr.layers[i].forward(q, mem, tr->layers[i]);
    } else {
        q = mcr.query.forward(m);
        mem = mcr.memory.forward(feats.values);
        for (const nn::AttentionBlock& layer : mcr.layers) q = layer.forward(q, mem);
    }
    const Mat f = tr != nullptr ? mcr.expand.forward(q.row(mid), tr->expand) : mcr.expand.forward(q.row(mid));

    Mat in(1, f.cols() + 6 * kJointCount + kShapeDim);
    in << f, encode_rot6d_row(rotations_init), beta_init.transpose();
    const Mat delta = tr != nullptr ? mcr.pose_head.forward(in, tr->refine_pose) : mcr.pose_head.forward(in);
    const Mat dbeta = tr != nullptr ? mcr.shape_head.forward(in, tr->refine_shape) : mcr.shape_head.forward(in);

    RefinementOutput out;
    out.motion_features = f.transpose();
    out.beta = beta_init + dbeta.transpose();
    for (int j = 0; j < kJointCount; ++j) {
        const Vec3 d(delta(0, 3 * j), delta(0, 3 * j + 1), delta(0, 3 * j + 2));
        out.rotations.push_back(rotations_init[j] * Rotation::from_axis_angle(d));
    }
    out.theta = theta_from_rotations(out.rotations);
    if (tr != nullptr) tr->delta = delta.transpose();
    return out;
}

}  // namespace

RefinementOutput mcr_forward(const MotionRefinement& mcr, const PointSequence& motion, const FeatureSequence& feats,
                             std::span<const Rotation> rotations_init, const Vec& beta_init) {
    return mcr_impl(mcr, motion, feats, rotations_init, beta_init, nullptr);
}

// ---- loss ----

LossBreakdown total_loss(const LossTensors& pred, const LossTensors& gt, const LossWeights& weights) {
    const auto mse = [](const Mat& a, const Mat& b, const char* name) {
        require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::shape_mismatch,
                std::string("total_loss: ") + name + " shape mismatch");
        return a.size() == 0 ? 0.0 : (a - b).squaredNorm() / static_cast<double>(a.size());
    };
    LossBreakdown out;
    out.mesh = mse(pred.mesh, gt.mesh, "mesh");
    out.joint = mse(pred.joints, gt.joints, "joint");
    out.pose = mse(pred.pose, gt.pose, "pose");
    out.shape = mse(pred.shape, gt.shape, "shape");
    out.total = weights.mesh * out.mesh + weights.joint * out.joint + weights.pose * out.pose + weights.shape * out.shape;
    return out;
}

// ---- full pipeline ----

Regressor Regressor::init(const RegressorConfig& config, const MiniBodyModel& model, std::uint64_t seed) {
    require(config.frames >= 2 && config.feature_width > 0 && config.width > 0 && config.depth > 0 &&
                config.heads > 0,
            ErrorKind::invalid_argument, "regressor: sizes must be positive");
    require(config.width % config.heads == 0, ErrorKind::invalid_argument,
            "regressor: width must be divisible by the head count");
    require(model.joint_count() == kJointCount, ErrorKind::shape_mismatch, "regressor: model must have 24 joints");
    const auto hidden = [](int chosen, int in) { return chosen > 0 ? chosen : 2 * in; };
    const int f = config.feature_width;
    const int c = config.width;
    const int k6 = 6 * kJointCount;
    const int refine_in = f + k6 + kShapeDim;

    Rng rng(seed);
    Regressor r;
    r.config = config;
    r.tik.heads.swing = nn::Mlp::init(3 * kJointCount, hidden(0, 3 * kJointCount), k6, rng);
    r.tik.heads.twist = nn::Mlp::init(f, hidden(config.twist_hidden, f), 2 * kTwistCount, rng);
    r.tik.fuse = nn::Mlp::init(k6 + 2 * kTwistCount, hidden(0, k6 + 2 * kTwistCount), c, rng);
    r.tik.attention = nn::AttentionBlock::init(c, config.heads, hidden(config.ffn_hidden, c), rng);
    r.tik.pose_head = nn::Mlp::init(c, hidden(0, c), k6, rng);
    r.bsf = bsf_mlp_init(model);
    r.mcr.query = nn::Dense::init(3 * kJointCount, c, nn::Activation::identity, rng);
    r.mcr.memory = nn::Dense::init(f, c, nn::Activation::identity, rng);
    for (int i = 0; i < config.depth; ++i) {
        r.mcr.layers.push_back(nn::AttentionBlock::init(c, config.heads, hidden(config.ffn_hidden, c), rng));
    }
    r.mcr.expand = nn::Dense::init(c, f, nn::Activation::identity, rng);
    r.mcr.pose_head = nn::Mlp::init(refine_in, hidden(config.refine_hidden, refine_in), 3 * kJointCount, rng);
    r.mcr.shape_head = nn::Mlp::init(refine_in, hidden(config.refine_hidden, refine_in), kShapeDim, rng);
    for (nn::Mlp* head : {&r.mcr.pose_head, &r.mcr.shape_head}) {
        head->layers.back().weight.setZero();
        head->layers.back().bias.setZero();
    }
    return r;
}

RegressorOutput regress(const Regressor& net, const DisentangledRepr& repr, const FeatureSequence& feats,
                        const MiniBodyModel& model, RegressorTrace* trace) {
    require(feats.width() == net.config.feature_width, ErrorKind::shape_mismatch,
            "regressor: feature width does not match the network");
    if (trace != nullptr) trace->repr = repr;
    RegressorOutput out;
    out.rotations_init = tik_impl(net.tik, repr, feats, trace);
    out.theta_init = theta_from_rotations(out.rotations_init);

    const Points aligned = bsf_align(repr.bone_lengths, rest_joints(model, Vec::Zero(kShapeDim)), model.tree());
    if (trace != nullptr) {
        out.beta_init = net.bsf.project.forward(net.bsf.lift.forward(flatten_points(aligned), trace->lift), trace->project)
                            .transpose();
    } else {
        out.beta_init = bsf_apply(net.bsf, aligned);
    }

    RefinementOutput ref = mcr_impl(net.mcr, repr.motion, feats, out.rotations_init, out.beta_init, trace);
    out.theta_refined = std::move(ref.theta);
    out.beta_refined = std::move(ref.beta);
    out.motion_features = std::move(ref.motion_features);
    out.rotations_refined = std::move(ref.rotations);
    return out;
}

namespace {

FitResult finish(const MiniBodyModel& model, RegressorOutput params) {
    FitResult out;
    const Points rest = rest_joints(model, params.beta_refined);
    out.joints = forward_kinematics(model.tree(), params.rotations_refined, rest).joints;
    out.mesh = skin_mesh(model, params.rotations_refined, params.beta_refined);
    out.params = std::move(params);
    return out;
}

SkeletonSequence gather(const SkeletonSequence& seq, const std::vector<int>& idx) {
    SkeletonSequence out;
    for (int i : idx) out.frames.push_back(seq.frames[i]);
    return out;
}

FeatureSequence gather(const FeatureSequence& feats, const std::vector<int>& idx) {
    FeatureSequence out{Mat(static_cast<Eigen::Index>(idx.size()), feats.values.cols())};
    for (size_t i = 0; i < idx.size(); ++i) out.values.row(static_cast<Eigen::Index>(i)) = feats.values.row(idx[i]);
    return out;
}

}  // namespace

FitResult fit_sequence(const Regressor& net, const SkeletonSequence& seq, const FeatureSequence& feats,
                       const MiniBodyModel& model) {
    const DisentangledRepr repr = disentangle(seq, model.edges);
    return finish(model, regress(net, repr, feats, model));
}

std::vector<int> window_indices(int center, int frames, int length) {
    require(frames > 0 && length > 0 && center >= 0 && center < length, ErrorKind::invalid_argument,
            "window_indices: center out of range");
    std::vector<int> out;
    const int start = center - mid_frame(frames);
    for (int i = 0; i < frames; ++i) out.push_back(std::clamp(start + i, 0, length - 1));
    return out;
}

std::vector<FitResult> fit_all_frames(const Regressor& net, const SkeletonSequence& seq, const FeatureSequence& feats,
                                      const MiniBodyModel& model) {
    require(feats.frame_count() == seq.frame_count(), ErrorKind::shape_mismatch,
            "fit_all_frames: feature and skeleton frame counts differ");
    std::vector<FitResult> out;
    for (int t = 0; t < seq.frame_count(); ++t) {
        const auto idx = window_indices(t, net.config.frames, seq.frame_count());
        out.push_back(fit_sequence(net, gather(seq, idx), gather(feats, idx), model));
    }
    return out;
}

std::vector<FitResult> frame_ik_all_frames(const Regressor& net, const SkeletonSequence& seq,
                                           const FeatureSequence& feats, const MiniBodyModel& model) {
    require(feats.frame_count() == seq.frame_count(), ErrorKind::shape_mismatch,
            "frame_ik_all_frames: feature and skeleton frame counts differ");
    const KinematicTree tree = model.tree();
    const Mat twist = normalize_twist(net.tik.heads.twist.forward(feats.values));
    std::vector<FitResult> out;
    for (int t = 0; t < seq.frame_count(); ++t) {
        const auto idx = window_indices(t, net.config.frames, seq.frame_count());
        const DisentangledRepr repr = disentangle(gather(seq, idx), model.edges);
        RegressorOutput params;
        params.beta_init = bsf_forward(net.bsf, repr, model);
        params.beta_refined = params.beta_init;
        std::vector<double> angles(kJointCount, 0.0);
        for (int j = 1; j < kJointCount; ++j) angles[j] = std::atan2(twist(t, 2 * (j - 1) + 1), twist(t, 2 * (j - 1)));
        const Points rest = rest_joints(model, params.beta_init);
        params.rotations_init = analytic_ik(seq.frames[t], rest, tree, angles).local;
        params.rotations_refined = params.rotations_init;
        params.theta_init = theta_from_rotations(params.rotations_init);
        params.theta_refined = params.theta_init;
        out.push_back(finish(model, std::move(params)));
    }
    return out;
}

}  // namespace arts
