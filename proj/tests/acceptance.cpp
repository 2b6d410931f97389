// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "arts/evaluation.hpp"
#include "arts/lifter.hpp"
#include "arts/regressor.hpp"
#include "arts/rotations.hpp"
#include "arts/skeleton.hpp"
#include "arts/training.hpp"
#include "oracles.hpp"

using namespace arts;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

// ---- 1. rotations ----

Outcome rotation_suite() {
    const auto start = Clock::now();
    Rng rng(101);
    double ortho = 0.0, round_trip = 0.0, recompose = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Rot6D r;
        for (double& v : r.values) v = rng.normal();
        const Mat3 m = rot6d_to_matrix(r).matrix();
        ortho = std::max(ortho, (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff());
        ortho = std::max(ortho, std::abs(m.determinant() - 1.0));

        const Mat3 q = oracle::random_rotation(rng);
        const Rotation rq = Rotation::from_matrix(q);
        round_trip = std::max(round_trip, (rot6d_to_matrix(matrix_to_rot6d(rq)).matrix() - q).cwiseAbs().maxCoeff());

        const Vec3 axis = oracle::random_unit(rng);
        const SwingTwist st = swing_twist_decompose(rq, axis);
        const Mat3 back = st.swing.matrix() * oracle::axis_rotation(axis, st.twist_angle);
        recompose = std::max(recompose, (back - q).cwiseAbs().maxCoeff());
    }
    const double elapsed = seconds_since(start);
    Outcome o;
    o.pass = ortho <= 1e-9 && round_trip <= 1e-9 && recompose <= 1e-9 && elapsed < 1.0;
    o.detail = fmt("orthonormality %.2e, 6D round trip %.2e, swing-twist %.2e, %.3f s", ortho, round_trip, recompose,
                   elapsed);
    return o;
}

// ---- 2. Procrustes ----

Outcome procrustes_suite() {
    Rng rng(202);
    double param_err = 0.0, pa_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Points x = oracle::random_points(24, rng, 0.5);
        const double s = rng.uniform(0.5, 2.0);
        const Mat3 r = oracle::random_rotation(rng);
        const Vec3 t(rng.normal(), rng.normal(), rng.normal());
        Points y(x.rows(), 3);
        for (Eigen::Index k = 0; k < x.rows(); ++k) y.row(k) = (s * r * x.row(k).transpose() + t).transpose();

        const Similarity est = similarity_procrustes(x, y);
        param_err = std::max(param_err, std::abs(est.scale - s));
        param_err = std::max(param_err, (est.rotation.matrix() - r).cwiseAbs().maxCoeff());
        param_err = std::max(param_err, (est.translation - t).cwiseAbs().maxCoeff());
        pa_err = std::max(pa_err, pa_mpjpe(y, x));
    }
    Outcome o;
    o.pass = param_err <= 1e-9 && pa_err <= 1e-9;
    o.detail = fmt("similarity recovery %.2e, PA-MPJPE of transformed copy %.2e mm", param_err, pa_err);
    return o;
}

// ---- 3. disentanglement ----

Outcome disentanglement_suite() {
    Rng rng(303);
    const std::vector<int> parents(std::begin(kSmplParents), std::end(kSmplParents));
    const KinematicTree tree(parents);
    double motion_err = 0.0, bone_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int t_count = 2 + static_cast<int>(rng.below(7));
        SkeletonSequence seq;
        for (int t = 0; t < t_count; ++t) seq.frames.push_back(oracle::random_points(kJointCount, rng));
        const PointSequence m = compute_motion(seq);
        const auto m_ref = oracle::motion(seq.frames);
        for (int t = 0; t < t_count; ++t) motion_err = std::max(motion_err, (m[t] - m_ref[t]).cwiseAbs().maxCoeff());
        const auto b = compute_bone_lengths(seq, tree.edges());
        const auto b_ref = oracle::bone_lengths(seq.frames, parents);
        for (size_t e = 0; e < b.size(); ++e) bone_err = std::max(bone_err, std::abs(b[e] - b_ref[e]));
    }
    Outcome o;
    o.pass = motion_err <= 1e-12 && bone_err <= 1e-12;
    o.detail = fmt("motion %.2e, bone lengths %.2e", motion_err, bone_err);
    return o;
}

// ---- 4. body model ----

Outcome body_model_suite() {
    const MiniBodyModel model = build_synthetic_model(11, 96);
    const KinematicTree tree = model.tree();
    Rng rng(404);
    double fk_identity = 0.0, bone_invariance = 0.0, affine = 0.0;
    const Mat a = composed_joint_map(model);
    const Points base = rest_joints(model, Vec::Zero(kShapeDim));
    for (int i = 0; i < 100; ++i) {
        Vec beta(kShapeDim), beta2(kShapeDim);
        for (int k = 0; k < kShapeDim; ++k) {
            beta[k] = rng.uniform(-2.0, 2.0);
            beta2[k] = rng.uniform(-2.0, 2.0);
        }
        const Points rest = rest_joints(model, beta);
        const std::vector<Rotation> identity(kJointCount);
        fk_identity = std::max(fk_identity, (forward_kinematics(tree, identity, rest).joints - rest).cwiseAbs().maxCoeff());

        std::vector<Rotation> local;
        for (int j = 0; j < kJointCount; ++j) local.push_back(Rotation::from_matrix(oracle::random_rotation(rng)));
        const Points posed = forward_kinematics(tree, local, rest).joints;
        for (const Edge& e : tree.edges()) {
            const double l0 = (rest.row(e.child) - rest.row(e.parent)).norm();
            const double l1 = (posed.row(e.child) - posed.row(e.parent)).norm();
            bone_invariance = std::max(bone_invariance, std::abs(l1 - l0));
        }

        // rest_joints(beta) = rest_joints(0) + A beta, and mixes affinely.
        const Vec offset = a * beta;
        for (int k = 0; k < kJointCount; ++k) {
            for (int c = 0; c < 3; ++c) affine = std::max(affine, std::abs(rest(k, c) - base(k, c) - offset[3 * k + c]));
        }
        const double w = rng.uniform();
        const Points mixed = rest_joints(model, w * beta + (1.0 - w) * beta2);
        const Points blend = w * rest + (1.0 - w) * rest_joints(model, beta2);
        affine = std::max(affine, (mixed - blend).cwiseAbs().maxCoeff());
    }
    Outcome o;
    o.pass = fk_identity <= 1e-12 && bone_invariance <= 1e-9 && affine <= 1e-12;
    o.detail = fmt("FK(identity) %.2e, bone length drift %.2e, rest-joint affinity %.2e", fk_identity, bone_invariance,
                   affine);
    return o;
}

// ---- 5. shape fitting ----

Outcome shape_fitting_suite() {
    const MiniBodyModel model = build_synthetic_model(12, 96);
    const KinematicTree tree = model.tree();
    const ShapeFitting mlp = bsf_mlp_init(model);
    const Mat w_pinv = oracle::pinv(model.joint_regressor);
    const Mat s_pinv = oracle::pinv(model.shape_blend);
    Rng rng(505);
    double fixed_point = 0.0, contract = 0.0, round_trip = 0.0, chain = 0.0;
    for (int i = 0; i < 100; ++i) {
        Vec beta(kShapeDim);
        for (int k = 0; k < kShapeDim; ++k) beta[k] = rng.uniform(-2.0, 2.0);
        const Points rest = rest_joints(model, beta);

        std::vector<double> own;
        for (const Edge& e : tree.edges()) own.push_back((rest.row(e.child) - rest.row(e.parent)).norm());
        fixed_point = std::max(fixed_point, (bsf_align(own, rest, tree) - rest).cwiseAbs().maxCoeff());

        std::vector<double> lengths;
        for (size_t e = 0; e < tree.edges().size(); ++e) lengths.push_back(rng.uniform(0.02, 0.5));
        const Points aligned = bsf_align(lengths, rest, tree);
        for (size_t e = 0; e < tree.edges().size(); ++e) {
            const Edge edge = tree.edges()[e];
            const Vec3 got = (aligned.row(edge.child) - aligned.row(edge.parent)).transpose();
            const Vec3 dir = (rest.row(edge.child) - rest.row(edge.parent)).transpose().normalized();
            contract = std::max(contract, std::abs(got.norm() - lengths[e]));
            contract = std::max(contract, (got - lengths[e] * dir).cwiseAbs().maxCoeff());
        }

        round_trip = std::max(round_trip, (bsf_analytic_beta(rest, model) - beta).cwiseAbs().maxCoeff());

        const Points input = oracle::random_points(kJointCount, rng, 0.3);
        const Points lifted = w_pinv * input;
        Vec flat(lifted.size());
        for (Eigen::Index v = 0; v < lifted.rows(); ++v) {
            for (int c = 0; c < 3; ++c) flat[3 * v + c] = lifted(v, c) - model.template_vertices(v, c);
        }
        const Vec expected = s_pinv * flat;
        chain = std::max(chain, (bsf_apply(mlp, input) - expected).cwiseAbs().maxCoeff());
    }
    Outcome o;
    o.pass = fixed_point <= 1e-12 && contract <= 1e-12 && round_trip <= 1e-6 && chain <= 1e-9;
    o.detail = fmt("align fixed point %.2e, length contract %.2e, beta round trip %.2e, MLP vs chain %.2e", fixed_point,
                   contract, round_trip, chain);
    return o;
}

// ---- 6. gradient checks ----

template <class M>
double check_single_input(M& module, Mat& input, Rng& rng) {
    typename M::Cache cache;
    const Mat y = module.forward(input, cache);
    const Mat weights = oracle::random_mat(y.rows(), y.cols(), rng);
    M grad = nn::zeros_like(module);
    const Mat dx = module.backward(cache, weights, grad);
    std::vector<Mat*> params = nn::parameters(module);
    std::vector<Mat> analytic;
    for (const Mat* g : nn::parameters(grad)) analytic.push_back(*g);
    params.push_back(&input);
    analytic.push_back(dx);
    const auto loss = [&] { return (module.forward(input).array() * weights.array()).sum(); };
    return oracle::fd_relative_error(loss, params, analytic);
}

// LayerNorm gains start at one and biases at zero; perturb them so their
// gradients are exercised away from the initial point.
template <class M>
void jitter(M& module, Rng& rng) {
    nn::visit_params(module, "", [&](const std::string&, Mat& p) {
        for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += 0.1 * rng.normal();
    });
}

Outcome gradient_suite() {
    const auto start = Clock::now();
    double dense = 0.0, mlp = 0.0, self_attn = 0.0, cross_attn = 0.0, lifter = 0.0;
    for (int point = 0; point < 5; ++point) {
        Rng rng(600 + point);
        {
            nn::Dense d = nn::Dense::init(7, 5, nn::Activation::gelu, rng);
            Mat x = oracle::random_mat(4, 7, rng);
            dense = std::max(dense, check_single_input(d, x, rng));
        }
        {
            nn::Mlp m = nn::Mlp::init(6, 12, 5, rng);
            Mat x = oracle::random_mat(4, 6, rng);
            mlp = std::max(mlp, check_single_input(m, x, rng));
        }
        {
            nn::AttentionBlock b = nn::AttentionBlock::init(8, 2, 16, rng);
            jitter(b, rng);
            Mat x = oracle::random_mat(5, 8, rng);
            self_attn = std::max(self_attn, check_single_input(b, x, rng));
        }
        {
            nn::AttentionBlock b = nn::AttentionBlock::init(8, 2, 16, rng);
            jitter(b, rng);
            Mat x = oracle::random_mat(4, 8, rng);
            Mat mem = oracle::random_mat(6, 8, rng);
            nn::AttentionBlock::Cache cache;
            const Mat y = b.forward(x, mem, cache);
            const Mat weights = oracle::random_mat(y.rows(), y.cols(), rng);
            nn::AttentionBlock grad = nn::zeros_like(b);
            Mat dmem = Mat::Zero(mem.rows(), mem.cols());
            const Mat dx = b.backward(cache, weights, grad, dmem);
            std::vector<Mat*> params = nn::parameters(b);
            std::vector<Mat> analytic;
            for (const Mat* g : nn::parameters(grad)) analytic.push_back(*g);
            params.push_back(&x);
            analytic.push_back(dx);
            params.push_back(&mem);
            analytic.push_back(dmem);
            const auto loss = [&] { return (b.forward(x, mem).array() * weights.array()).sum(); };
            cross_attn = std::max(cross_attn, oracle::fd_relative_error(loss, params, analytic));
        }
        {
            nn::DualStreamBlock b = nn::DualStreamBlock::init(3, 4, 8, 2, 16, rng);
            jitter(b, rng);
            Mat x = oracle::random_mat(12, 8, rng);
            lifter = std::max(lifter, check_single_input(b, x, rng));
        }
    }
    const double elapsed = seconds_since(start);
    Outcome o;
    const double worst = std::max({dense, mlp, self_attn, cross_attn, lifter});
    o.pass = worst <= 1e-4 && elapsed < 30.0;
    o.detail = fmt("dense %.1e, mlp %.1e, self-attn %.1e, cross-attn %.1e", dense, mlp, self_attn, cross_attn) +
               fmt(", lifter block %.1e, %.2f s", lifter, elapsed);
    return o;
}

// ---- 7. loss ----

Outcome loss_suite() {
    Rng rng(707);
    const LossWeights w;
    bool ok = w.mesh == 1.0 && w.joint == 1.0 && w.pose == 0.06 && w.shape == 0.06;
    double oracle_err = 0.0;
    for (int i = 0; i < 100; ++i) {
        LossTensors p{oracle::random_mat(96, 3, rng), oracle::random_mat(24, 3, rng), oracle::random_mat(24, 9, rng),
                      oracle::random_mat(1, 10, rng)};
        LossTensors g{oracle::random_mat(96, 3, rng), oracle::random_mat(24, 3, rng), oracle::random_mat(24, 9, rng),
                      oracle::random_mat(1, 10, rng)};
        const LossBreakdown l = total_loss(p, g, w);
        const double expected = 1.0 * oracle::mse(p.mesh, g.mesh) + 1.0 * oracle::mse(p.joints, g.joints) +
                                0.06 * oracle::mse(p.pose, g.pose) + 0.06 * oracle::mse(p.shape, g.shape);
        oracle_err = std::max(oracle_err, std::abs(l.total - expected));
    }

    // Perturbing one entry of one tensor by a dyadic step changes exactly one term.
    const LossTensors gt{Mat::Constant(96, 3, 0.25), Mat::Constant(24, 3, 0.5), Mat::Constant(24, 9, 0.125),
                         Mat::Constant(1, 10, 1.0)};
    const double delta = 0.5;
    for (int term = 0; term < 4; ++term) {
        LossTensors pred = gt;
        Mat* target[4] = {&pred.mesh, &pred.joints, &pred.pose, &pred.shape};
        (*target[term])(0, 0) += delta;
        const LossBreakdown l = total_loss(pred, gt, w);
        const double terms[4] = {l.mesh, l.joint, l.pose, l.shape};
        const double lambda[4] = {1.0, 1.0, 0.06, 0.06};
        for (int k = 0; k < 4; ++k) {
            const double expected = k == term ? delta * delta / static_cast<double>(target[k]->size()) : 0.0;
            ok = ok && terms[k] == expected;
        }
        ok = ok && l.total == lambda[term] * terms[term];
    }
    Outcome o;
    o.pass = ok && oracle_err <= 1e-12;
    o.detail = fmt("four-term oracle %.2e, single-term perturbations ", oracle_err) + (ok ? "exact" : "INEXACT");
    return o;
}

// ---- 8 and 9. training and noise robustness ----

struct TrainedSetup {
    Dataset data;
    Regressor net;
    double untrained_mpjpe = 0.0;
    double train_seconds = 0.0;
    int steps = 0;
};

constexpr int kTrainSteps = 1000;

double held_out_mpjpe(const Regressor& net, const Dataset& data) {
    std::vector<MetricReport> reports;
    for (const SequenceRecord& r : data.test) {
        reports.push_back(evaluate_sequence(net, data.model, r, r.skeleton, Variant::temporal));
    }
    return mean_report(reports).mpjpe;
}

TrainedSetup& trained_setup() {
    static TrainedSetup setup = [] {
        TrainedSetup s;
        DatasetConfig dc;
        dc.seed = 7;
        dc.train_count = 64;
        dc.test_count = 16;
        dc.vertex_count = 96;
        s.data = generate_dataset(dc);
        RegressorConfig rc;
        rc.frames = 16;
        rc.width = 128;
        rc.heads = 4;
        rc.twist_hidden = 128;
        rc.refine_hidden = 128;
        s.net = Regressor::init(rc, s.data.model, 3);
        s.untrained_mpjpe = held_out_mpjpe(s.net, s.data);

        RegressorTraining tc;
        tc.steps = kTrainSteps;
        tc.batch = 4;
        tc.learning_rate = 1e-3;
        tc.shape_learning_rate = 3e-4;
        tc.noise = 0.05;
        tc.seed = 1;
        const auto samples = to_training_samples(s.data.train);
        const auto start = Clock::now();
        s.steps = static_cast<int>(train_regressor(s.net, s.data.model, samples, tc).size());
        s.train_seconds = seconds_since(start);
        return s;
    }();
    return setup;
}

Outcome end_to_end_suite() {
    TrainedSetup& s = trained_setup();
    const double trained = held_out_mpjpe(s.net, s.data);
    // On clean skeletons the analytic solve is exact, so the comparison uses
    // noisy input at the training noise level, averaged over three draws.
    const double sigma = 0.05 * mean_bone_length(s.data.model);
    double learned = 0.0, analytic = 0.0;
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        learned += beta_error(s.net, s.data.model, s.data.test, sigma, seed) / 3.0;
        analytic += analytic_beta_error(s.data.model, s.net.config.frames, s.data.test, sigma, seed) / 3.0;
    }
    Outcome o;
    o.pass = trained <= 0.5 * s.untrained_mpjpe && learned < analytic && s.steps <= 2000 && s.train_seconds < 600.0;
    o.detail = fmt("MPJPE %.1f -> %.1f mm, beta error %.4f vs analytic %.4f", s.untrained_mpjpe, trained, learned,
                   analytic) +
               fmt(", %.0f steps in %.1f s", s.steps, s.train_seconds);
    return o;
}

Outcome noise_trend_suite() {
    TrainedSetup& s = trained_setup();
    const double levels[] = {0.0, 0.02, 0.10};
    const auto rows = ablate_noise(s.net, s.data.model, s.data.test, levels, 20, 31);
    const auto find = [&](double level, Variant v) {
        for (const AblationRow& r : rows) {
            if (r.level == level && r.variant == v) return r.report;
        }
        return MetricReport{};
    };
    const MetricReport t0 = find(0.0, Variant::temporal), t2 = find(0.02, Variant::temporal),
                       t10 = find(0.10, Variant::temporal);
    const MetricReport f0 = find(0.0, Variant::frame_ik), f2 = find(0.02, Variant::frame_ik),
                       f10 = find(0.10, Variant::frame_ik);
    const double accel_t = t2.accel - t0.accel;
    const double accel_f = f2.accel - f0.accel;
    const double ratio_t = t10.mpjpe / t0.mpjpe;
    const double ratio_f = f10.mpjpe / f0.mpjpe;
    Outcome o;
    o.pass = accel_t < accel_f && ratio_t > 1.0 && ratio_f > 1.0 && ratio_t < ratio_f;
    o.detail = fmt("Accel increase at 2%%: temporal %.3f vs per-frame %.3f", accel_t, accel_f) +
               fmt("; MPJPE ratio at 10%%: temporal %.3f vs per-frame %.3f", ratio_t, ratio_f);
    return o;
}

// ---- 10. metrics ----

Outcome metrics_suite() {
    const MiniBodyModel model = build_synthetic_model(13, 96);
    Rng rng(1010);
    double err = 0.0;
    for (int i = 0; i < 50; ++i) {
        PointSequence pj, gj;
        for (int t = 0; t < 5; ++t) {
            pj.push_back(oracle::random_points(24, rng, 0.5));
            gj.push_back(oracle::random_points(24, rng, 0.5));
            const Points pv = oracle::random_points(96, rng, 0.5);
            const Points gv = oracle::random_points(96, rng, 0.5);
            err = std::max(err, std::abs(mpjpe(pj[t], gj[t]) - oracle::mpjpe(pj[t], gj[t])));
            err = std::max(err, std::abs(pa_mpjpe(pj[t], gj[t]) - oracle::pa_mpjpe(pj[t], gj[t])));
            err = std::max(err, std::abs(mpvpe(pv, gv, model) - oracle::mpvpe(pv, gv, model.joint_regressor)));
        }
        err = std::max(err, std::abs(accel_error(pj, gj) - oracle::accel(pj, gj)));
    }

    // Linear trajectories with dyadic coordinates have exactly zero second difference.
    bool annihilated = true;
    for (int i = 0; i < 20; ++i) {
        PointSequence a, b;
        Points a0(24, 3), av(24, 3), b0(24, 3), bv(24, 3);
        for (Points* p : {&a0, &av, &b0, &bv}) {
            for (Eigen::Index k = 0; k < p->size(); ++k) p->data()[k] = static_cast<double>(rng.below(2048)) / 1024.0 - 1.0;
        }
        for (int t = 0; t < 6; ++t) {
            a.push_back(a0 + t * av);
            b.push_back(b0 + t * bv);
        }
        annihilated = annihilated && accel_error(a, b) == 0.0;
    }
    Outcome o;
    o.pass = err <= 1e-12 && annihilated;
    o.detail = fmt("largest oracle difference %.2e mm, linear annihilation ", err) + (annihilated ? "exact" : "INEXACT");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"rotation suite", rotation_suite},
        {"Procrustes suite", procrustes_suite},
        {"disentanglement oracle equivalence", disentanglement_suite},
        {"body-model identities", body_model_suite},
        {"shape-fitting exactness", shape_fitting_suite},
        {"gradient checks", gradient_suite},
        {"loss arithmetic", loss_suite},
        {"end-to-end synthetic fitting", end_to_end_suite},
        {"noise-robustness trend", noise_trend_suite},
        {"metrics oracle equivalence", metrics_suite},
    };
    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("criterion %zu %s: %s (%s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
