#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arts/dataset.hpp"
#include "arts/metrics.hpp"
#include "arts/regressor.hpp"

namespace arts {

enum class Variant {
    temporal,  // full TIK -> BSF -> MCR pipeline
    frame_ik,  // per-frame analytic IK with learned twist
};

const char* to_string(Variant v);

// Metrics of per-frame predictions against a record: MPJPE, PA-MPJPE and
// MPVPE averaged over frames, Accel over the whole sequence.
MetricReport score_predictions(std::span<const FitResult> predictions, const SequenceRecord& record,
                               const MiniBodyModel& model, std::optional<double> fps = std::nullopt);

std::vector<FitResult> predict(const Regressor& net, const MiniBodyModel& model, const SkeletonSequence& input,
                               const FeatureSequence& features, Variant variant);

MetricReport evaluate_sequence(const Regressor& net, const MiniBodyModel& model, const SequenceRecord& record,
                               const SkeletonSequence& input, Variant variant,
                               std::optional<double> fps = std::nullopt);

MetricReport mean_report(std::span<const MetricReport> reports);

// Mean absolute beta error of the refined output over the mid frame of every
// clamped window.
double beta_error(const Regressor& net, const MiniBodyModel& model, std::span<const SequenceRecord> records,
                  double noise_sigma = 0.0, std::uint64_t noise_seed = 0);

// Same for beta from the frozen analytic solve on the noisy bone lengths.
double analytic_beta_error(const MiniBodyModel& model, int frames, std::span<const SequenceRecord> records,
                           double noise_sigma = 0.0, std::uint64_t noise_seed = 0);

// Noise robustness: sigma = p * mean template bone length, metrics averaged
// over sequences and then over `seeds` noise draws per level. `transform`, when
// set, maps each noisy skeleton to the network input (e.g. a lifter).
using InputTransform = std::function<SkeletonSequence(const SkeletonSequence&)>;

struct AblationRow {
    double level = 0.0;
    Variant variant = Variant::temporal;
    MetricReport report;
};

std::vector<AblationRow> ablate_noise(const Regressor& net, const MiniBodyModel& model,
                                      std::span<const SequenceRecord> records, std::span<const double> levels,
                                      int seeds, std::uint64_t base_seed, std::optional<double> fps = std::nullopt,
                                      const InputTransform& transform = {});

// Deterministic noise seed for one (level, draw, sequence) triple.
std::uint64_t noise_seed(std::uint64_t base_seed, double level, int draw, int sequence);

}  // namespace arts
