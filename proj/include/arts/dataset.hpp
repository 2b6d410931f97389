#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "arts/body_model.hpp"
#include "arts/regressor.hpp"
#include "arts/skeleton.hpp"
#include "arts/training.hpp"

namespace arts {

struct DatasetConfig {
    std::uint64_t seed = 0;
    int train_count = 64;
    int test_count = 16;
    int sequence_length = 32;
    int vertex_count = 96;
    int feature_width = kFeatureWidth;
};

// One synthetic sequence: smooth pose trajectory, fixed shape, and everything
// derived from them through the body model.
struct SequenceRecord {
    std::string id;
    Mat theta;  // frames x 72, axis-angle
    Vec beta;
    SkeletonSequence skeleton;
    PointSequence mesh;
    FeatureSequence features;

    std::vector<std::vector<Rotation>> local_rotations() const;
};

struct Dataset {
    DatasetConfig config;
    MiniBodyModel model;
    std::vector<SequenceRecord> train;
    std::vector<SequenceRecord> test;
};

// Per-joint axis-angle curves through random control points (Catmull-Rom),
// one control point every `stride` frames. Leaf joints only twist about their
// bone axis; the root stays within moderate angles.
Mat random_pose_trajectory(const MiniBodyModel& model, int frames, Rng& rng, int stride = 8);

SequenceRecord make_sequence(const MiniBodyModel& model, const std::string& id, const Mat& theta, const Vec& beta,
                             std::uint64_t feature_seed, int feature_width);

// Deterministic in config.seed.
Dataset generate_dataset(const DatasetConfig& config);

TrainingSample to_training_sample(const SequenceRecord& record);
std::vector<TrainingSample> to_training_samples(const std::vector<SequenceRecord>& records);

// Layout: model.json, manifest.json, sequences/<id>.json and
// sequences/<id>.skeleton.jsonl.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace arts
