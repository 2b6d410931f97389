#include "arts/training.hpp"

#include <cmath>
#include <numeric>

#include "arts/error.hpp"
#include "arts/kinematics.hpp"

namespace arts {

namespace {

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

Mat rotation_rows(std::span<const Rotation> rotations) {
    Mat out(static_cast<Eigen::Index>(rotations.size()), 9);
    for (size_t j = 0; j < rotations.size(); ++j) {
        out.row(static_cast<Eigen::Index>(j)) = rotations[j].matrix().reshaped().transpose();
    }
    return out;
}

struct ParamGrads {
    std::vector<Mat3> rotations;
    Vec beta;
};

// Weighted mesh/joint/pose/shape loss of one parameter set against the ground
// truth, scaled by `scale`, plus its gradient with respect to the local
// rotations and shape.
LossBreakdown params_loss(const MiniBodyModel& model, const KinematicTree& tree, std::span<const Rotation> rotations,
                          const Vec& beta, const LossTensors& gt, std::span<const Rotation> gt_rotations,
                          const LossWeights& w, double scale, ParamGrads* grad) {
    const Points shaped = shaped_vertices(model, beta);
    const Points rest = model.joint_regressor * shaped;
    const FkResult fk = forward_kinematics(tree, rotations, rest);
    LossTensors pred;
    pred.mesh = skin_vertices(model, fk, rest, shaped);
    pred.joints = fk.joints;
    pred.pose = rotation_rows(rotations);
    pred.shape = beta.transpose();
    const LossBreakdown loss = total_loss(pred, gt, w);
    if (grad == nullptr) return loss;

    const auto factor = [&](double lambda, const Mat& m) { return scale * lambda * 2.0 / static_cast<double>(m.size()); };
    const Points g_joints = factor(w.joint, pred.joints) * (pred.joints - gt.joints);
    const Points g_mesh = factor(w.mesh, pred.mesh) * (pred.mesh - gt.mesh);
    BodyGradients body = body_backward(model, rotations, beta, g_joints, &g_mesh);
    const double fp = factor(w.pose, pred.pose);
    grad->rotations.resize(rotations.size());
    for (size_t j = 0; j < rotations.size(); ++j) {
        grad->rotations[j] = body.local_rotations[j] + fp * (rotations[j].matrix() - gt_rotations[j].matrix());
    }
    grad->beta = body.beta + factor(w.shape, pred.shape) * (beta - gt.shape.transpose());
    return loss;
}

Mat zero_rows_except(Eigen::Index rows, Eigen::Index row, const Mat& value) {
    Mat out = Mat::Zero(rows, value.cols());
    out.row(row) = value;
    return out;
}

}  // namespace

double mean_bone_length(const MiniBodyModel& model) {
    const auto lengths = template_bone_lengths(model);
    return std::accumulate(lengths.begin(), lengths.end(), 0.0) / static_cast<double>(lengths.size());
}

SkeletonSequence add_joint_noise(const SkeletonSequence& seq, double sigma, Rng& rng) {
    require(sigma >= 0.0, ErrorKind::invalid_argument, "add_joint_noise: sigma must be non-negative");
    SkeletonSequence out = seq;
    if (sigma == 0.0) return out;
    for (Points& f : out.frames) {
        for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] += sigma * rng.normal();
    }
    return out;
}

PreparedSample prepare_sample(const TrainingSample& sample, const MiniBodyModel& model) {
    const int t_count = sample.skeleton.frame_count();
    require(static_cast<int>(sample.local.size()) == t_count && sample.features.frame_count() == t_count,
            ErrorKind::shape_mismatch, "prepare_sample: frame counts differ");
    const KinematicTree tree = model.tree();
    const Points rest = rest_joints(model, sample.beta);
    PreparedSample out;
    out.source = &sample;
    out.swing.resize(t_count, 6 * kJointCount);
    out.twist.resize(t_count, 2 * kTwistCount);
    for (int t = 0; t < t_count; ++t) {
        const auto& local = sample.local[t];
        std::vector<Rotation> swings(kJointCount);
        swings[0] = local[0];
        for (int j = 1; j < kJointCount; ++j) {
            const SwingTwist st = swing_twist_decompose(local[j], tree.twist_axis(rest, j));
            swings[j] = st.swing;
            out.twist(t, 2 * (j - 1)) = std::cos(st.twist_angle);
            out.twist(t, 2 * (j - 1) + 1) = std::sin(st.twist_angle);
        }
        out.swing.row(t) = encode_rot6d_row(swings);
        out.mesh.push_back(skin_mesh(model, local, sample.beta));
    }
    return out;
}

WindowLoss window_loss(const Regressor& net, const MiniBodyModel& model, const PreparedSample& sample,
                       const SkeletonSequence& input, int center, const LossWeights& weights, const AuxWeights& aux,
                       Regressor* grad) {
    const TrainingSample& src = *sample.source;
    const int len = src.skeleton.frame_count();
    require(input.frame_count() == len, ErrorKind::shape_mismatch, "window_loss: input frame count mismatch");
    const auto idx = window_indices(center, net.config.frames, len);
    const FeatureSequence feats = gather(src.features, idx);
    const DisentangledRepr repr = disentangle(gather(input, idx), model.edges);
    const KinematicTree tree = model.tree();

    RegressorTrace tr;
    const RegressorOutput out = regress(net, repr, feats, model, grad != nullptr ? &tr : nullptr);

    LossTensors gt;
    gt.mesh = sample.mesh[center];
    gt.joints = src.skeleton.frames[center];
    gt.pose = rotation_rows(src.local[center]);
    gt.shape = src.beta.transpose();

    WindowLoss loss;
    ParamGrads g_ref, g_init;
    loss.refined = params_loss(model, tree, out.rotations_refined, out.beta_refined, gt, src.local[center], weights, 1.0,
                               grad != nullptr ? &g_ref : nullptr);
    loss.init = params_loss(model, tree, out.rotations_init, out.beta_init, gt, src.local[center], weights, aux.init,
                            grad != nullptr ? &g_init : nullptr);

    Mat swing_target(static_cast<Eigen::Index>(idx.size()), sample.swing.cols());
    Mat twist_target(static_cast<Eigen::Index>(idx.size()), sample.twist.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
        swing_target.row(static_cast<Eigen::Index>(i)) = sample.swing.row(idx[i]);
        twist_target.row(static_cast<Eigen::Index>(i)) = sample.twist.row(idx[i]);
    }
    // Swing and twist terms need the head outputs, which only the trace keeps.
    Mat swing_out, twist_unit;
    if (grad != nullptr) {
        swing_out = tr.swing_out;
        twist_unit = tr.twist_unit;
    } else {
        swing_out = net.tik.heads.swing.forward(joint_rows(repr.joints));
        twist_unit = normalize_twist(net.tik.heads.twist.forward(feats.values));
    }
    loss.swing = (swing_out - swing_target).squaredNorm() / static_cast<double>(swing_out.size());
    loss.twist = (twist_unit - twist_target).squaredNorm() / static_cast<double>(twist_unit.size());
    loss.total = loss.refined.total + aux.init * loss.init.total + aux.swing * loss.swing + aux.twist * loss.twist;
    if (grad == nullptr) return loss;

    const int t_count = static_cast<int>(idx.size());
    const int mid = tr.mid;

    // MCR: R_ref = R_init * exp(delta), beta_ref = beta_init + dbeta.
    std::vector<Mat3> g_rinit = g_init.rotations;
    Vec g_binit = g_init.beta + g_ref.beta;
    Mat g_delta(1, 3 * kJointCount);
    for (int j = 0; j < kJointCount; ++j) {
        const Vec3 d = tr.delta.segment<3>(3 * j);
        const Mat3 e = Rotation::from_axis_angle(d).matrix();
        const Mat3& r = out.rotations_init[j].matrix();
        g_rinit[j] += g_ref.rotations[j] * e.transpose();
        const Mat3 g_e = r.transpose() * g_ref.rotations[j];
        const auto jac = axis_angle_jacobian(d);
        for (int i = 0; i < 3; ++i) g_delta(0, 3 * j + i) = g_e.cwiseProduct(jac[i]).sum();
    }
    const MotionRefinement& mcr = net.mcr;
    Mat g_in = mcr.pose_head.backward(tr.refine_pose, g_delta, grad->mcr.pose_head);
    g_in += mcr.shape_head.backward(tr.refine_shape, g_ref.beta.transpose(), grad->mcr.shape_head);
    // Initial parameters enter the refinement heads detached; only F' carries gradient.
    const Mat g_f = g_in.leftCols(mcr.expand.out_features());
    Mat g_q = zero_rows_except(t_count, mid, mcr.expand.backward(tr.expand, g_f, grad->mcr.expand));
    Mat g_mem;
    for (size_t i = mcr.layers.size(); i-- > 0;) g_q = mcr.layers[i].backward(tr.layers[i], g_q, grad->mcr.layers[i], g_mem);
    mcr.query.backward(tr.query, g_q, grad->mcr.query);
    if (g_mem.size() != 0) mcr.memory.backward(tr.memory, g_mem, grad->mcr.memory);

    // BSF
    net.bsf.lift.backward(tr.lift, net.bsf.project.backward(tr.project, g_binit.transpose(), grad->bsf.project),
                          grad->bsf.lift);

    // TIK
    const TemporalIk& tik = net.tik;
    Mat g_pose(1, 6 * kJointCount);
    for (int j = 0; j < kJointCount; ++j) {
        Rot6D r;
        for (int a = 0; a < 6; ++a) r.values[a] = tr.pose_out(0, 6 * j + a);
        const auto g = rot6d_backward(r, g_rinit[j]);
        for (int a = 0; a < 6; ++a) g_pose(0, 6 * j + a) = g[a];
    }
    const Mat g_h = zero_rows_except(t_count, mid, tik.pose_head.backward(tr.pose_head, g_pose, grad->tik.pose_head));
    const Mat g_fused = tik.fuse.backward(tr.fuse, tik.attention.backward(tr.attention, g_h, grad->tik.attention),
                                          grad->tik.fuse);
    Mat g_swing = g_fused.leftCols(6 * kJointCount);
    Mat g_unit = g_fused.rightCols(2 * kTwistCount);
    g_swing += aux.swing * 2.0 / static_cast<double>(swing_out.size()) * (swing_out - swing_target);
    g_unit += aux.twist * 2.0 / static_cast<double>(twist_unit.size()) * (twist_unit - twist_target);
    tik.heads.swing.backward(tr.swing, g_swing, grad->tik.heads.swing);

    Mat g_raw(g_unit.rows(), g_unit.cols());
    for (Eigen::Index r = 0; r < g_unit.rows(); ++r) {
        for (Eigen::Index c = 0; c < g_unit.cols(); c += 2) {
            const double n = std::max(std::hypot(tr.twist_raw(r, c), tr.twist_raw(r, c + 1)), 1e-9);
            const double u0 = tr.twist_unit(r, c), u1 = tr.twist_unit(r, c + 1);
            const double dot = u0 * g_unit(r, c) + u1 * g_unit(r, c + 1);
            g_raw(r, c) = (g_unit(r, c) - u0 * dot) / n;
            g_raw(r, c + 1) = (g_unit(r, c + 1) - u1 * dot) / n;
        }
    }
    tik.heads.twist.backward(tr.twist, g_raw, grad->tik.heads.twist);
    return loss;
}

namespace {

bool all_finite(const TrainingSample& s) {
    if (!s.features.values.allFinite() || !s.beta.allFinite()) return false;
    for (const Points& f : s.skeleton.frames)
        if (!f.allFinite()) return false;
    return true;
}

}  // namespace

std::vector<TrainingLogEntry> train_regressor(Regressor& net, const MiniBodyModel& model,
                                              std::span<const TrainingSample> samples, const RegressorTraining& cfg,
                                              const TrainingCallback& on_step) {
    require(!samples.empty(), ErrorKind::invalid_argument, "train_regressor: no training samples");
    require(cfg.steps >= 0 && cfg.batch > 0, ErrorKind::invalid_argument, "train_regressor: bad step or batch count");
    std::vector<PreparedSample> prepared;
    for (size_t i = 0; i < samples.size(); ++i) {
        const TrainingSample& s = samples[i];
        require(all_finite(s), ErrorKind::invalid_argument,
                "train_regressor: sample " + std::to_string(i) + " has non-finite values");
        prepared.push_back(prepare_sample(s, model));
    }

    Rng rng(cfg.seed);
    const double unit = mean_bone_length(model);
    Regressor grad = nn::zeros_like(net);
    const std::vector<Mat*> grads_mut = nn::parameters(grad);
    // Two parameter groups: the analytical-MLP and everything else.
    std::vector<Mat*> shape_params = nn::parameters(net.bsf);
    std::vector<const Mat*> shape_grads;
    for (const Mat* g : nn::parameters(grad.bsf)) shape_grads.push_back(g);
    std::vector<Mat*> other_params;
    std::vector<const Mat*> other_grads;
    const auto collect = [&](auto& module, auto& module_grad) {
        for (Mat* p : nn::parameters(module)) other_params.push_back(p);
        for (Mat* g : nn::parameters(module_grad)) other_grads.push_back(g);
    };
    collect(net.tik, grad.tik);
    collect(net.mcr, grad.mcr);
    nn::AdamState state, shape_state;
    const nn::Adam adam{cfg.learning_rate};
    const nn::Adam shape_adam{cfg.shape_learning_rate > 0.0 ? cfg.shape_learning_rate : cfg.learning_rate};

    std::vector<TrainingLogEntry> log;
    for (int step = 0; step < cfg.steps; ++step) {
        for (Mat* g : grads_mut) g->setZero();
        TrainingLogEntry entry;
        entry.step = step;
        for (int b = 0; b < cfg.batch; ++b) {
            const PreparedSample& s = prepared[rng.below(prepared.size())];
            const int len = s.source->skeleton.frame_count();
            const int center = static_cast<int>(rng.below(static_cast<std::uint64_t>(len)));
            const double p = cfg.noise * rng.uniform();
            const SkeletonSequence input = add_joint_noise(s.source->skeleton, p * unit, rng);
            WindowLoss wl;
            try {
                wl = window_loss(net, model, s, input, center, cfg.weights, cfg.aux, &grad);
            } catch (const Error& e) {
                // Inputs are finite, so a numerical failure here comes from the parameters.
                if (e.kind() != ErrorKind::degenerate) throw;
                fail(ErrorKind::divergence, "regressor training diverged at step " + std::to_string(step) + " (" +
                                                e.what() + ")");
            }
            entry.loss += wl.total;
            entry.fit_loss += wl.refined.total;
            entry.mesh += wl.refined.mesh;
            entry.joint += wl.refined.joint;
            entry.pose += wl.refined.pose;
            entry.shape += wl.refined.shape;
        }
        const double inv = 1.0 / cfg.batch;
        entry.loss *= inv;
        entry.fit_loss *= inv;
        entry.mesh *= inv;
        entry.joint *= inv;
        entry.pose *= inv;
        entry.shape *= inv;
        if (!std::isfinite(entry.loss)) {
            fail(ErrorKind::divergence, "regressor training diverged at step " + std::to_string(step) +
                                            " (loss = " + std::to_string(entry.loss) + ")");
        }
        for (Mat* g : grads_mut) *g *= inv;
        adam.step(other_params, other_grads, state);
        if (!cfg.freeze_shape_fitting) shape_adam.step(shape_params, shape_grads, shape_state);
        log.push_back(entry);
        if (on_step) on_step(entry);
    }
    return log;
}

// ---- lifter ----

double lifter_window_loss(const nn::Lifter& lifter, const SkeletonSequence& window, nn::Lifter* grad) {
    const Mat x = nn::orthographic_tokens(window);
    const Mat target = nn::skeleton_tokens(window);
    if (grad == nullptr) return (lifter.forward(x) - target).squaredNorm() / static_cast<double>(target.size());
    nn::Lifter::Cache cache;
    const Mat diff = lifter.forward(x, cache) - target;
    lifter.backward(cache, 2.0 / static_cast<double>(diff.size()) * diff, *grad);
    return diff.squaredNorm() / static_cast<double>(diff.size());
}

std::vector<TrainingLogEntry> train_lifter(nn::Lifter& lifter, std::span<const TrainingSample> samples,
                                           const LifterTraining& cfg, const TrainingCallback& on_step) {
    require(!samples.empty(), ErrorKind::invalid_argument, "train_lifter: no training samples");
    require(cfg.steps >= 0 && cfg.batch > 0, ErrorKind::invalid_argument, "train_lifter: bad step or batch count");
    Rng rng(cfg.seed);
    nn::Lifter grad = nn::zeros_like(lifter);
    const std::vector<Mat*> params = nn::parameters(lifter);
    const std::vector<Mat*> grads_mut = nn::parameters(grad);
    const std::vector<const Mat*> grads(grads_mut.begin(), grads_mut.end());
    nn::AdamState state;
    const nn::Adam adam{cfg.learning_rate};
    std::vector<TrainingLogEntry> log;
    for (int step = 0; step < cfg.steps; ++step) {
        for (Mat* g : grads_mut) g->setZero();
        TrainingLogEntry entry;
        entry.step = step;
        for (int b = 0; b < cfg.batch; ++b) {
            const SkeletonSequence& seq = samples[rng.below(samples.size())].skeleton;
            const int center = static_cast<int>(rng.below(static_cast<std::uint64_t>(seq.frame_count())));
            entry.loss += lifter_window_loss(lifter, gather(seq, window_indices(center, lifter.frames, seq.frame_count())),
                                             &grad);
        }
        entry.loss /= cfg.batch;
        entry.joint = entry.loss;
        if (!std::isfinite(entry.loss)) {
            fail(ErrorKind::divergence, "lifter training diverged at step " + std::to_string(step));
        }
        for (Mat* g : grads_mut) *g /= cfg.batch;
        adam.step(params, grads, state);
        log.push_back(entry);
        if (on_step) on_step(entry);
    }
    return log;
}

SkeletonSequence lift_sequence(const nn::Lifter& lifter, const SkeletonSequence& seq) {
    SkeletonSequence out;
    const int mid = mid_frame(lifter.frames);
    for (int t = 0; t < seq.frame_count(); ++t) {
        const SkeletonSequence window = gather(seq, window_indices(t, lifter.frames, seq.frame_count()));
        out.frames.push_back(lifter.lift(window.frames).frames[mid]);
    }
    return out;
}

double lifter_error(const nn::Lifter& lifter, std::span<const TrainingSample> samples) {
    double total = 0.0;
    long count = 0;
    for (const TrainingSample& s : samples) {
        const SkeletonSequence lifted = lift_sequence(lifter, s.skeleton);
        for (int t = 0; t < lifted.frame_count(); ++t) {
            total += (lifted.frames[t] - s.skeleton.frames[t]).rowwise().norm().sum();
            count += lifted.frames[t].rows();
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

}  // namespace arts
