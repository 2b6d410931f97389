#include "arts/evaluation.hpp"

#include <bit>
#include <cmath>

#include "arts/error.hpp"
#include "arts/training.hpp"

namespace arts {

const char* to_string(Variant v) { return v == Variant::temporal ? "temporal" : "frame_ik"; }

MetricReport score_predictions(std::span<const FitResult> predictions, const SequenceRecord& record,
                               const MiniBodyModel& model, std::optional<double> fps) {
    const int t_count = record.skeleton.frame_count();
    require(static_cast<int>(predictions.size()) == t_count, ErrorKind::shape_mismatch,
            "score_predictions: one prediction per frame is required");
    MetricReport r;
    PointSequence pred_joints;
    for (int t = 0; t < t_count; ++t) {
        const FitResult& p = predictions[t];
        r.mpjpe += mpjpe(p.joints, record.skeleton.frames[t]);
        r.pa_mpjpe += pa_mpjpe(p.joints, record.skeleton.frames[t]);
        r.mpvpe += mpvpe(p.mesh, record.mesh[t], model);
        pred_joints.push_back(p.joints);
    }
    r.mpjpe /= t_count;
    r.pa_mpjpe /= t_count;
    r.mpvpe /= t_count;
    r.accel = accel_error(pred_joints, record.skeleton.frames, fps);
    return r;
}

std::vector<FitResult> predict(const Regressor& net, const MiniBodyModel& model, const SkeletonSequence& input,
                               const FeatureSequence& features, Variant variant) {
    return variant == Variant::temporal ? fit_all_frames(net, input, features, model)
                                        : frame_ik_all_frames(net, input, features, model);
}

MetricReport evaluate_sequence(const Regressor& net, const MiniBodyModel& model, const SequenceRecord& record,
                               const SkeletonSequence& input, Variant variant, std::optional<double> fps) {
    return score_predictions(predict(net, model, input, record.features, variant), record, model, fps);
}

MetricReport mean_report(std::span<const MetricReport> reports) {
    MetricReport m;
    if (reports.empty()) return m;
    for (const MetricReport& r : reports) {
        m.mpjpe += r.mpjpe;
        m.pa_mpjpe += r.pa_mpjpe;
        m.mpvpe += r.mpvpe;
        m.accel += r.accel;
    }
    const double n = static_cast<double>(reports.size());
    m.mpjpe /= n;
    m.pa_mpjpe /= n;
    m.mpvpe /= n;
    m.accel /= n;
    return m;
}

namespace {

SkeletonSequence window_of(const SkeletonSequence& seq, const std::vector<int>& idx) {
    SkeletonSequence out;
    for (int i : idx) out.frames.push_back(seq.frames[i]);
    return out;
}

}  // namespace

double beta_error(const Regressor& net, const MiniBodyModel& model, std::span<const SequenceRecord> records,
                  double noise_sigma, std::uint64_t seed) {
    Rng rng(seed);
    double total = 0.0;
    long count = 0;
    for (const SequenceRecord& r : records) {
        const SkeletonSequence input = add_joint_noise(r.skeleton, noise_sigma, rng);
        for (const FitResult& f : fit_all_frames(net, input, r.features, model)) {
            total += (f.params.beta_refined - r.beta).cwiseAbs().mean();
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double analytic_beta_error(const MiniBodyModel& model, int frames, std::span<const SequenceRecord> records,
                           double noise_sigma, std::uint64_t seed) {
    Rng rng(seed);
    const Points mean_joints = rest_joints(model, Vec::Zero(kShapeDim));
    const KinematicTree tree = model.tree();
    double total = 0.0;
    long count = 0;
    for (const SequenceRecord& r : records) {
        const SkeletonSequence input = add_joint_noise(r.skeleton, noise_sigma, rng);
        for (int t = 0; t < input.frame_count(); ++t) {
            const auto idx = window_indices(t, frames, input.frame_count());
            const auto lengths = compute_bone_lengths(window_of(input, idx), model.edges);
            const Vec beta = bsf_analytic_beta(bsf_align(lengths, mean_joints, tree), model);
            total += (beta - r.beta).cwiseAbs().mean();
            ++count;
        }
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

std::uint64_t noise_seed(std::uint64_t base_seed, double level, int draw, int sequence) {
    std::uint64_t h = base_seed * 0x9e3779b97f4a7c15ULL + std::bit_cast<std::uint64_t>(level);
    h = (h ^ (h >> 31)) * 0xbf58476d1ce4e5b9ULL + static_cast<std::uint64_t>(draw);
    h = (h ^ (h >> 29)) * 0x94d049bb133111ebULL + static_cast<std::uint64_t>(sequence);
    return h ^ (h >> 32);
}

std::vector<AblationRow> ablate_noise(const Regressor& net, const MiniBodyModel& model,
                                      std::span<const SequenceRecord> records, std::span<const double> levels,
                                      int seeds, std::uint64_t base_seed, std::optional<double> fps,
                                      const InputTransform& transform) {
    require(seeds > 0, ErrorKind::invalid_argument, "ablate_noise: at least one noise draw is required");
    const double unit = mean_bone_length(model);
    std::vector<AblationRow> rows;
    for (double level : levels) {
        require(level >= 0.0, ErrorKind::invalid_argument, "ablate_noise: noise levels must be non-negative");
        // Without noise every draw is identical, so one suffices.
        const int draws = level == 0.0 ? 1 : seeds;
        for (Variant variant : {Variant::frame_ik, Variant::temporal}) {
            std::vector<MetricReport> per_draw;
            for (int d = 0; d < draws; ++d) {
                std::vector<MetricReport> per_seq;
                for (size_t i = 0; i < records.size(); ++i) {
                    Rng rng(noise_seed(base_seed, level, d, static_cast<int>(i)));
                    SkeletonSequence input = add_joint_noise(records[i].skeleton, level * unit, rng);
                    if (transform) input = transform(input);
                    per_seq.push_back(evaluate_sequence(net, model, records[i], input, variant, fps));
                }
                per_draw.push_back(mean_report(per_seq));
            }
            rows.push_back({level, variant, mean_report(per_draw)});
        }
    }
    return rows;
}

}  // namespace arts
