#include "arts/commands.hpp"

#include <cstdio>

#include "arts/checkpoint.hpp"
#include "arts/error.hpp"
#include "arts/evaluation.hpp"
#include "arts/io.hpp"

namespace arts {

namespace {

namespace fs = std::filesystem;
using io::format_number;

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void check_dataset(const RunConfig& config, const Dataset& ds) {
    require(ds.config.feature_width == config.feature_width, ErrorKind::invalid_argument,
            "dataset feature width " + std::to_string(ds.config.feature_width) + " differs from config " +
                std::to_string(config.feature_width));
    require(!ds.test.empty(), ErrorKind::invalid_argument, "dataset has no test sequences");
}

// Network input for one record: noisy skeleton, optionally lifted from its
// orthographic projection.
InputTransform input_transform(const RunConfig& config, const Checkpoint& ck) {
    if (!config.use_lifter) return {};
    require(ck.lifter.has_value(), ErrorKind::invalid_argument, "use_lifter is set but the checkpoint has no lifter");
    const nn::Lifter& lifter = *ck.lifter;
    return [&lifter](const SkeletonSequence& s) { return lift_sequence(lifter, s); };
}

SkeletonSequence network_input(const RunConfig& config, const MiniBodyModel& model, const SequenceRecord& r, int index,
                               const InputTransform& transform) {
    Rng rng(noise_seed(config.seed, config.noise, 0, index));
    SkeletonSequence input = add_joint_noise(r.skeleton, config.noise * mean_bone_length(model), rng);
    return transform ? transform(input) : input;
}

std::vector<std::string> metric_cells(const MetricReport& m) {
    return {format_number(m.mpjpe), format_number(m.pa_mpjpe), format_number(m.mpvpe), format_number(m.accel)};
}

}  // namespace

void cmd_generate(const RunConfig& config, const fs::path& out, std::ostream& log) {
    config.validate();
    const Dataset ds = generate_dataset(config.dataset());
    save_dataset(out, ds);
    io::write_text_file(out / "config.json", config_to_json_text(config));
    log << "generated " << ds.train.size() << " train and " << ds.test.size() << " test sequences of "
        << config.sequence_length << " frames in " << out.string() << "\n";
}

void cmd_fit(const RunConfig& config, const fs::path& data, const std::optional<fs::path>& checkpoint,
             const fs::path& out, std::ostream& log) {
    config.validate();
    const Dataset ds = load_dataset(data);
    check_dataset(config, ds);
    const Checkpoint ck = checkpoint ? load_checkpoint(*checkpoint, ds.model)
                                     : Checkpoint{Regressor::init(config.regressor(), ds.model, config.seed), {}, {}};
    const InputTransform transform = input_transform(config, ck);
    const std::string hash = config_hash(config);

    std::vector<std::string> header{"sequence", "frame", "mpjpe_mm", "pa_mpjpe_mm", "mpvpe_mm"};
    for (int i = 0; i < kShapeDim; ++i) header.push_back("beta_" + std::to_string(i));
    for (int i = 0; i < kPoseDim; ++i) header.push_back("theta_" + std::to_string(i));
    header.push_back("config_hash");
    io::CsvWriter csv(header);
    double total = 0.0;
    for (size_t i = 0; i < ds.test.size(); ++i) {
        const SequenceRecord& r = ds.test[i];
        const SkeletonSequence input = network_input(config, ds.model, r, static_cast<int>(i), transform);
        const int center = r.skeleton.frame_count() / 2;
        const auto idx = window_indices(center, ck.regressor.config.frames, r.skeleton.frame_count());
        SkeletonSequence window;
        FeatureSequence feats{Mat(static_cast<Eigen::Index>(idx.size()), r.features.width())};
        for (size_t k = 0; k < idx.size(); ++k) {
            window.frames.push_back(input.frames[idx[k]]);
            feats.values.row(static_cast<Eigen::Index>(k)) = r.features.values.row(idx[k]);
        }
        const FitResult fit = fit_sequence(ck.regressor, window, feats, ds.model);
        const double e = mpjpe(fit.joints, r.skeleton.frames[center]);
        total += e;
        std::vector<std::string> row{r.id, std::to_string(center), format_number(e),
                                     format_number(pa_mpjpe(fit.joints, r.skeleton.frames[center])),
                                     format_number(mpvpe(fit.mesh, r.mesh[center], ds.model))};
        for (int k = 0; k < kShapeDim; ++k) row.push_back(format_number(fit.params.beta_refined[k]));
        for (int k = 0; k < kPoseDim; ++k) row.push_back(format_number(fit.params.theta_refined[k]));
        row.push_back(hash);
        csv.row(row);
    }
    csv.save(out / "fit.csv");
    log << "fit " << ds.test.size() << " sequences, mean mid-frame MPJPE " << fixed(total / ds.test.size())
        << " mm -> " << (out / "fit.csv").string() << "\n";
}

void cmd_train(const RunConfig& config, const fs::path& data, const fs::path& out, std::ostream& log) {
    config.validate();
    const Dataset ds = load_dataset(data);
    check_dataset(config, ds);
    const std::vector<TrainingSample> samples = to_training_samples(ds.train);
    io::CsvWriter csv({"stage", "step", "loss", "fit_loss", "mesh", "joint", "pose", "shape"});
    const auto logger = [&csv](const char* stage) {
        return [&csv, stage](const TrainingLogEntry& e) {
            csv.row({stage, std::to_string(e.step), format_number(e.loss), format_number(e.fit_loss),
                     format_number(e.mesh), format_number(e.joint), format_number(e.pose), format_number(e.shape)});
        };
    };

    Rng lifter_rng(config.seed + 11);
    Checkpoint ck{Regressor::init(config.regressor(), ds.model, config.seed), config.lifter(), std::nullopt};
    ck.lifter = nn::Lifter::init(*ck.lifter_config, lifter_rng);
    const double lifter_before = lifter_error(*ck.lifter, to_training_samples(ds.test));
    train_lifter(*ck.lifter, samples, config.lifter_training(), logger("lifter"));
    const double lifter_after = lifter_error(*ck.lifter, to_training_samples(ds.test));
    log << "stage 1: lifter test joint error " << fixed(lifter_before * 1000.0) << " -> " << fixed(lifter_after * 1000.0)
        << " mm over " << config.lifter_iterations << " steps\n";

    const auto reg_log = train_regressor(ck.regressor, ds.model, samples, config.regressor_training(), logger("regressor"));
    log << "stage 2: regressor loss " << (reg_log.empty() ? "n/a" : fixed(reg_log.front().loss)) << " -> "
        << (reg_log.empty() ? "n/a" : fixed(reg_log.back().loss)) << " over " << config.iterations << " steps\n";

    save_checkpoint(out / "checkpoint.json", ck);
    csv.save(out / "loss.csv");
    io::write_text_file(out / "config.json", config_to_json_text(config));
    log << "wrote " << (out / "checkpoint.json").string() << " and " << (out / "loss.csv").string() << "\n";
}

void cmd_eval(const RunConfig& config, const fs::path& data, const fs::path& checkpoint, const fs::path& out,
              std::ostream& log) {
    config.validate();
    const Dataset ds = load_dataset(data);
    check_dataset(config, ds);
    const Checkpoint ck = load_checkpoint(checkpoint, ds.model);
    const InputTransform transform = input_transform(config, ck);
    const std::string hash = config_hash(config);
    io::CsvWriter csv({"sequence", "mpjpe_mm", "pa_mpjpe_mm", "mpvpe_mm", "accel", "config_hash"});
    std::vector<MetricReport> reports;
    for (size_t i = 0; i < ds.test.size(); ++i) {
        const SequenceRecord& r = ds.test[i];
        const SkeletonSequence input = network_input(config, ds.model, r, static_cast<int>(i), transform);
        reports.push_back(evaluate_sequence(ck.regressor, ds.model, r, input, Variant::temporal, config.fps));
        std::vector<std::string> row{r.id};
        for (const std::string& c : metric_cells(reports.back())) row.push_back(c);
        row.push_back(hash);
        csv.row(row);
    }
    const MetricReport mean = mean_report(reports);
    std::vector<std::string> row{"mean"};
    for (const std::string& c : metric_cells(mean)) row.push_back(c);
    row.push_back(hash);
    csv.row(row);
    csv.save(out / "metrics.csv");
    log << "eval: MPJPE " << fixed(mean.mpjpe) << " mm, PA-MPJPE " << fixed(mean.pa_mpjpe) << " mm, MPVPE "
        << fixed(mean.mpvpe) << " mm, Accel " << fixed(mean.accel) << " -> " << (out / "metrics.csv").string() << "\n";
}

void cmd_ablate_noise(const RunConfig& config, const fs::path& data, const fs::path& checkpoint, const fs::path& out,
                      std::ostream& log) {
    config.validate();
    const Dataset ds = load_dataset(data);
    check_dataset(config, ds);
    const Checkpoint ck = load_checkpoint(checkpoint, ds.model);
    const std::string hash = config_hash(config);
    const auto rows = ablate_noise(ck.regressor, ds.model, ds.test, config.noise_levels, config.noise_seeds,
                                   config.seed, config.fps, input_transform(config, ck));
    io::CsvWriter csv({"level", "variant", "mpjpe_mm", "pa_mpjpe_mm", "mpvpe_mm", "accel", "config_hash"});
    for (const AblationRow& r : rows) {
        std::vector<std::string> row{format_number(r.level), to_string(r.variant)};
        for (const std::string& c : metric_cells(r.report)) row.push_back(c);
        row.push_back(hash);
        csv.row(row);
        log << "p=" << r.level << " " << to_string(r.variant) << ": MPJPE " << fixed(r.report.mpjpe) << " mm, Accel "
            << fixed(r.report.accel) << "\n";
    }
    csv.save(out / "ablation.csv");
    log << "wrote " << (out / "ablation.csv").string() << "\n";
}

}  // namespace arts
