#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "arts/dataset.hpp"
#include "arts/lifter.hpp"
#include "arts/regressor.hpp"
#include "arts/training.hpp"

namespace arts {

struct RunConfig {
    std::uint64_t seed = 0;
    int frames = 16;  // T
    int sequence_length = 32;
    int train_count = 64;
    int test_count = 16;
    int vertex_count = 96;
    int feature_width = kFeatureWidth;
    int c1 = 256;
    int c2 = 512;
    int l1 = 3;
    int l2 = 1;
    int heads = 8;
    int twist_hidden = 256;
    int refine_hidden = 512;
    double learning_rate = 1e-3;
    double shape_learning_rate = 3e-4;  // analytical-MLP layers
    double lifter_learning_rate = 1e-3;
    int iterations = 1000;
    int lifter_iterations = 100;
    int batch = 4;
    double noise = 0.0;        // p applied to evaluation inputs
    double train_noise = 0.05; // max p during regressor training
    std::optional<double> fps;
    std::vector<double> noise_levels{0.0, 0.02, 0.10};
    int noise_seeds = 20;
    bool use_lifter = false;   // evaluate on lifted orthographic projections instead of skeletons

    // Throws ErrorKind::invalid_argument on the first violated constraint.
    void validate() const;

    DatasetConfig dataset() const;
    RegressorConfig regressor() const;
    nn::LifterConfig lifter() const;
    RegressorTraining regressor_training() const;
    LifterTraining lifter_training() const;
};

// Strict: unknown keys and wrongly typed values are errors.
RunConfig config_from_json_text(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const RunConfig& config);

// FNV-1a over the canonical (sorted-key) serialization, 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace arts
