#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "arts/dataset.hpp"
#include "arts/error.hpp"
#include "arts/evaluation.hpp"
#include "arts/regressor.hpp"
#include "arts/training.hpp"
#include "oracles.hpp"

using namespace arts;

namespace {

const Dataset& small_dataset() {
    static const Dataset d = [] {
        DatasetConfig c;
        c.seed = 5;
        c.train_count = 3;
        c.test_count = 2;
        c.sequence_length = 10;
        c.vertex_count = 96;
        c.feature_width = 32;
        return generate_dataset(c);
    }();
    return d;
}

RegressorConfig small_config() {
    RegressorConfig c;
    c.frames = 4;
    c.feature_width = 32;
    c.width = 8;
    c.heads = 2;
    c.depth = 1;
    c.twist_hidden = 8;
    c.refine_hidden = 8;
    c.ffn_hidden = 8;
    return c;
}

}  // namespace

TEST_CASE("window indices are clamped and centered on the mid frame") {
    CHECK(mid_frame(16) == 8);
    CHECK(mid_frame(5) == 2);
    const auto w = window_indices(0, 4, 10);
    CHECK(w == std::vector<int>{0, 0, 0, 1});
    CHECK(window_indices(9, 4, 10) == std::vector<int>{7, 8, 9, 9});
    CHECK(window_indices(5, 4, 10) == std::vector<int>{3, 4, 5, 6});
    CHECK(window_indices(0, 4, 10)[static_cast<size_t>(mid_frame(4))] == 0);
}

TEST_CASE("twist normalization yields unit pairs") {
    Rng rng(1);
    const Mat n = normalize_twist(oracle::random_mat(3, 2 * kTwistCount, rng));
    for (int r = 0; r < 3; ++r) {
        for (int j = 0; j < kTwistCount; ++j) CHECK(std::hypot(n(r, 2 * j), n(r, 2 * j + 1)) == doctest::Approx(1.0));
    }
}

TEST_CASE("6D row encoding round trips") {
    Rng rng(2);
    std::vector<Rotation> rots;
    for (int j = 0; j < kJointCount; ++j) rots.push_back(Rotation::from_matrix(oracle::random_rotation(rng)));
    const auto back = decode_rot6d_row(encode_rot6d_row(rots));
    for (int j = 0; j < kJointCount; ++j) CHECK(geodesic_distance(back[j], rots[j]) < 1e-12);
}

TEST_CASE("features are deterministic in their seed") {
    const Dataset& d = small_dataset();
    const SequenceRecord& r = d.train[0];
    const FeatureSequence a = synth_features(r.skeleton, 9, 32);
    const FeatureSequence b = synth_features(r.skeleton, 9, 32);
    const FeatureSequence c = synth_features(r.skeleton, 10, 32);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
    CHECK(a.width() == 32);
    CHECK(a.frame_count() == r.skeleton.frame_count());
}

TEST_CASE("composed and chained shape solves agree") {
    const MiniBodyModel m = build_synthetic_model(3, 96);
    CHECK(compare_shape_routes(m, 20, 1).max_abs_difference < 1e-9);
    // Under noise the chain is not the least-squares solution of the composed
    // map, so the routes differ and the direct solve has the smaller residual.
    CHECK(compare_shape_routes(m, 20, 2, 0.01).max_abs_difference > 1e-6);
    Rng rng(2);
    for (int s = 0; s < 20; ++s) {
        Vec beta(kShapeDim);
        for (int i = 0; i < kShapeDim; ++i) beta[i] = rng.uniform(-2.0, 2.0);
        Points joints = rest_joints(m, beta);
        for (Eigen::Index i = 0; i < joints.size(); ++i) joints.data()[i] += 0.01 * rng.normal();
        const double direct = (rest_joints(m, bsf_analytic_beta(joints, m)) - joints).squaredNorm();
        const double chained = (rest_joints(m, bsf_chained_beta(joints, m)) - joints).squaredNorm();
        CHECK(direct <= chained * (1.0 + 1e-12));
    }
}

TEST_CASE("shape fitting recovers beta from a posed clean sequence") {
    const Dataset& d = small_dataset();
    const Regressor net = Regressor::init(small_config(), d.model, 1);
    for (const SequenceRecord& r : d.test) {
        const DisentangledRepr repr = disentangle(r.skeleton, d.model.edges);
        CHECK((bsf_forward(net.bsf, repr, d.model) - r.beta).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("shape fitting rejects mismatched inputs") {
    const MiniBodyModel m = build_synthetic_model(3, 96);
    const KinematicTree tree = m.tree();
    const Points rest = rest_joints(m, Vec::Zero(kShapeDim));
    CHECK_THROWS_AS(bsf_align(std::vector<double>(5, 0.1), rest, tree), Error);
    CHECK_THROWS_AS(bsf_align(std::vector<double>(kJointCount - 1, -0.1), rest, tree), Error);
    CHECK_THROWS_AS(bsf_analytic_beta(Points::Zero(5, 3), m), Error);
}

TEST_CASE("untrained refinement leaves the initial estimate unchanged") {
    const Dataset& d = small_dataset();
    const Regressor net = Regressor::init(small_config(), d.model, 2);
    const SequenceRecord& r = d.test[0];
    const auto idx = window_indices(5, 4, r.skeleton.frame_count());
    SkeletonSequence win;
    FeatureSequence feats{Mat(4, 32)};
    for (int i = 0; i < 4; ++i) {
        win.frames.push_back(r.skeleton.frames[idx[i]]);
        feats.values.row(i) = r.features.values.row(idx[i]);
    }
    const RegressorOutput out = regress(net, disentangle(win, d.model.edges), feats, d.model);
    CHECK((out.theta_refined - out.theta_init).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((out.beta_refined - out.beta_init).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(out.motion_features.size() == 32);
    CHECK(out.rotations_refined.size() == kJointCount);
}

TEST_CASE("fit results are consistent with the body model") {
    const Dataset& d = small_dataset();
    const Regressor net = Regressor::init(small_config(), d.model, 3);
    const SequenceRecord& r = d.test[1];
    const auto fits = fit_all_frames(net, r.skeleton, r.features, d.model);
    CHECK(fits.size() == static_cast<size_t>(r.skeleton.frame_count()));
    const FitResult& f = fits[3];
    CHECK((skin_mesh(d.model, f.params.rotations_refined, f.params.beta_refined) - f.mesh).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(f.joints.rows() == kJointCount);
    const auto ik = frame_ik_all_frames(net, r.skeleton, r.features, d.model);
    CHECK(ik.size() == fits.size());
}

TEST_CASE("loss is a weighted sum of mean squared errors") {
    Rng rng(5);
    const LossTensors a{oracle::random_mat(4, 3, rng), oracle::random_mat(2, 3, rng), oracle::random_mat(2, 9, rng),
                        oracle::random_mat(1, 10, rng)};
    const LossBreakdown zero = total_loss(a, a);
    CHECK(zero.total == 0.0);
    LossTensors b = a;
    b.joints = oracle::random_mat(3, 3, rng);
    CHECK_THROWS_AS(total_loss(a, b), Error);
}

namespace {

// Worst relative error between analytic and central-difference gradients over
// random entries of the given parameter indices.
double window_gradient_error(Regressor& net, const std::vector<size_t>& which, Rng& rng) {
    const Dataset& d = small_dataset();
    const TrainingSample sample = to_training_sample(d.train[0]);
    const PreparedSample prepared = prepare_sample(sample, d.model);
    const LossWeights w;
    const AuxWeights aux;
    Regressor grad = nn::zeros_like(net);
    window_loss(net, d.model, prepared, sample.skeleton, 4, w, aux, &grad);

    std::vector<Mat*> params = nn::parameters(net);
    std::vector<Mat*> grads = nn::parameters(grad);
    const auto loss = [&] { return window_loss(net, d.model, prepared, sample.skeleton, 4, w, aux, nullptr).total; };
    double worst = 0.0;
    for (int probe = 0; probe < 300; ++probe) {
        const size_t p = which[rng.below(which.size())];
        const Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(params[p]->size())));
        double& v = params[p]->data()[i];
        const double keep = v;
        v = keep + 1e-6;
        const double up = loss();
        v = keep - 1e-6;
        const double down = loss();
        v = keep;
        const double numeric = (up - down) / 2e-6;
        const double analytic = grads[p]->data()[i];
        worst = std::max(worst, std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-4}));
    }
    return worst;
}

}  // namespace

TEST_CASE("window loss gradient matches finite differences") {
    const Dataset& d = small_dataset();
    Rng rng(7);
    Regressor net = Regressor::init(small_config(), d.model, 6);
    std::vector<size_t> all(nn::parameters(net).size());
    std::iota(all.begin(), all.end(), size_t{0});
    // With zero refinement outputs the detached initial estimate carries no
    // gradient, so the full gradient is exact.
    CHECK(window_gradient_error(net, all, rng) < 1e-4);

    // Off zero, the initial estimate feeds the refinement heads through a
    // stop-gradient, so only the refinement parameters are exact.
    for (nn::Dense& layer : {std::ref(net.mcr.pose_head.layers.back()), std::ref(net.mcr.shape_head.layers.back())}) {
        layer.weight = oracle::random_mat(layer.weight.rows(), layer.weight.cols(), rng, 0.01);
        layer.bias = oracle::random_mat(1, layer.bias.cols(), rng, 0.01);
    }
    std::vector<size_t> refine;
    const std::vector<Mat*> params = nn::parameters(net);
    for (Mat* m : nn::parameters(net.mcr)) refine.push_back(static_cast<size_t>(std::find(params.begin(), params.end(), m) - params.begin()));
    CHECK(window_gradient_error(net, refine, rng) < 1e-4);
}

TEST_CASE("training lowers the loss and reports divergence") {
    const Dataset& d = small_dataset();
    Regressor net = Regressor::init(small_config(), d.model, 8);
    const auto samples = to_training_samples(d.train);
    RegressorTraining tc;
    tc.steps = 60;
    tc.batch = 2;
    tc.learning_rate = 3e-3;
    tc.seed = 1;
    const auto log = train_regressor(net, d.model, samples, tc);
    REQUIRE(log.size() == 60);
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 10; ++i) {
        first += log[static_cast<size_t>(i)].loss;
        last += log[log.size() - 1 - static_cast<size_t>(i)].loss;
    }
    CHECK(last < first);

    auto broken = samples;
    broken[1].features.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Regressor fresh = Regressor::init(small_config(), d.model, 8);
    try {
        train_regressor(fresh, d.model, broken, tc);
        FAIL("expected invalid input");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_argument);
    }

    // A non-finite weight poisons the forward pass.
    fresh.tik.pose_head.layers.front().weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        train_regressor(fresh, d.model, samples, tc);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::divergence);
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }
}

TEST_CASE("frozen shape fitting stays at its analytic initialization") {
    const Dataset& d = small_dataset();
    Regressor net = Regressor::init(small_config(), d.model, 9);
    const ShapeFitting before = net.bsf;
    RegressorTraining tc;
    tc.steps = 5;
    tc.batch = 1;
    tc.learning_rate = 1e-3;
    tc.freeze_shape_fitting = true;
    train_regressor(net, d.model, to_training_samples(d.train), tc);
    CHECK(net.bsf.lift.weight == before.lift.weight);
    CHECK(net.bsf.project.bias == before.project.bias);
}

TEST_CASE("joint noise scales with sigma and is reproducible") {
    const Dataset& d = small_dataset();
    Rng a(3), b(3);
    const SkeletonSequence n1 = add_joint_noise(d.test[0].skeleton, 0.01, a);
    const SkeletonSequence n2 = add_joint_noise(d.test[0].skeleton, 0.01, b);
    CHECK(n1.frames[2] == n2.frames[2]);
    double sq = 0.0;
    long count = 0;
    for (int t = 0; t < n1.frame_count(); ++t) {
        sq += (n1.frames[t] - d.test[0].skeleton.frames[t]).squaredNorm();
        count += n1.frames[t].size();
    }
    CHECK(std::sqrt(sq / count) == doctest::Approx(0.01).epsilon(0.15));
    Rng c(1);
    CHECK_THROWS_AS(add_joint_noise(d.test[0].skeleton, -1.0, c), Error);
}

TEST_CASE("lifter training lowers its error") {
    const Dataset& d = small_dataset();
    nn::LifterConfig lc;
    lc.frames = 4;
    lc.width = 8;
    lc.depth = 1;
    lc.heads = 2;
    lc.ffn_hidden = 8;
    Rng rng(4);
    nn::Lifter lifter = nn::Lifter::init(lc, rng);
    const auto samples = to_training_samples(d.train);
    const double before = lifter_error(lifter, samples);
    LifterTraining tc;
    tc.steps = 40;
    tc.batch = 2;
    tc.learning_rate = 3e-3;
    train_lifter(lifter, samples, tc);
    CHECK(lifter_error(lifter, samples) < before);
    CHECK(lift_sequence(lifter, d.test[0].skeleton).frame_count() == d.test[0].skeleton.frame_count());
}

TEST_CASE("noise ablation rows and seeding") {
    const Dataset& d = small_dataset();
    const Regressor net = Regressor::init(small_config(), d.model, 10);
    const double levels[] = {0.0, 0.05};
    const auto rows = ablate_noise(net, d.model, d.test, levels, 2, 3);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].level == 0.0);
    CHECK(rows[0].variant == Variant::frame_ik);
    CHECK(rows[3].variant == Variant::temporal);
    CHECK(rows[2].report.mpjpe > rows[0].report.mpjpe);
    CHECK(noise_seed(1, 0.02, 0, 0) != noise_seed(1, 0.02, 1, 0));
    CHECK(noise_seed(1, 0.02, 0, 0) != noise_seed(1, 0.10, 0, 0));
    CHECK(noise_seed(1, 0.02, 0, 0) == noise_seed(1, 0.02, 0, 0));
    const double bad[] = {-0.1};
    CHECK_THROWS_AS(ablate_noise(net, d.model, d.test, bad, 1, 0), Error);
}

TEST_CASE("evaluation on clean input: analytic beta error is zero") {
    const Dataset& d = small_dataset();
    CHECK(analytic_beta_error(d.model, 4, d.test) < 1e-6);
    const Regressor net = Regressor::init(small_config(), d.model, 11);
    CHECK(beta_error(net, d.model, d.test) < 1e-6);
}
