#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "arts/lifter.hpp"
#include "arts/regressor.hpp"

namespace arts {

// One ground-truth sequence: skeleton, features and the parameters behind them.
struct TrainingSample {
    SkeletonSequence skeleton;
    FeatureSequence features;
    std::vector<std::vector<Rotation>> local;  // per frame, per joint
    Vec beta;
};

// Per-frame supervision derived once from a TrainingSample.
struct PreparedSample {
    const TrainingSample* source = nullptr;
    Mat swing;   // frames x 6K, swing part of each local rotation (root: full rotation)
    Mat twist;   // frames x 2(K-1), (cos, sin) of each twist angle
    PointSequence mesh;
};

PreparedSample prepare_sample(const TrainingSample& sample, const MiniBodyModel& model);

// Auxiliary supervision of the intermediate heads.
struct AuxWeights {
    double swing = 1.0;
    double twist = 1.0;
    double init = 1.0;  // scales the fitting loss evaluated on (theta_init, beta_init)
};

struct WindowLoss {
    LossBreakdown refined;
    LossBreakdown init;
    double swing = 0.0;
    double twist = 0.0;
    double total = 0.0;
};

// Loss of one T-frame window centered on `center`, with `input` the (possibly
// noisy) skeleton fed to the network. When `grad` is given, dL/dparam is
// accumulated into it.
WindowLoss window_loss(const Regressor& net, const MiniBodyModel& model, const PreparedSample& sample,
                       const SkeletonSequence& input, int center, const LossWeights& weights,
                       const AuxWeights& aux, Regressor* grad);

struct RegressorTraining {
    int steps = 1000;
    int batch = 4;
    double learning_rate = 3e-5;
    // Each window gets Gaussian joint noise with sigma = p * mean template bone
    // length, p drawn uniformly from [0, noise].
    double noise = 0.0;
    std::uint64_t seed = 0;
    LossWeights weights;
    AuxWeights aux;
    // Learning rate of the analytical-MLP layers; 0 uses learning_rate. Their
    // pseudo-inverse initialization is already exact on clean data, so they
    // usually want a much smaller step.
    double shape_learning_rate = 0.0;
    bool freeze_shape_fitting = false;
};

struct TrainingLogEntry {
    int step = 0;
    double loss = 0.0;       // total objective
    double fit_loss = 0.0;   // weighted mesh/joint/pose/shape loss of the refined output
    double mesh = 0.0;
    double joint = 0.0;
    double pose = 0.0;
    double shape = 0.0;
};

using TrainingCallback = std::function<void(const TrainingLogEntry&)>;

// Throws ErrorKind::divergence on a non-finite loss.
std::vector<TrainingLogEntry> train_regressor(Regressor& net, const MiniBodyModel& model,
                                              std::span<const TrainingSample> samples, const RegressorTraining& cfg,
                                              const TrainingCallback& on_step = {});

// ---- lifter ----

struct LifterTraining {
    int steps = 200;
    int batch = 2;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

// MSE between lifted and true joints of a T-frame window.
double lifter_window_loss(const nn::Lifter& lifter, const SkeletonSequence& window, nn::Lifter* grad);

std::vector<TrainingLogEntry> train_lifter(nn::Lifter& lifter, std::span<const TrainingSample> samples,
                                           const LifterTraining& cfg, const TrainingCallback& on_step = {});

// Mean joint error (meters) of the lifter's mid-frame predictions over every
// frame of every sample (clamped windows).
double lifter_error(const nn::Lifter& lifter, std::span<const TrainingSample> samples);

// Per-frame lifted skeleton using clamped windows and the mid-frame row.
SkeletonSequence lift_sequence(const nn::Lifter& lifter, const SkeletonSequence& seq);

// Adds N(0, sigma^2) to every coordinate.
SkeletonSequence add_joint_noise(const SkeletonSequence& seq, double sigma, Rng& rng);

double mean_bone_length(const MiniBodyModel& model);

}  // namespace arts
