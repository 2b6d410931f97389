#include "arts/dataset.hpp"

#include <cstdio>

#include "arts/error.hpp"
#include "arts/io.hpp"

namespace arts {

namespace {

constexpr double kRootAmplitude = 0.4;
constexpr double kJointAmplitude = 0.6;
constexpr double kLeafTwistAmplitude = 0.6;

double catmull_rom(double p0, double p1, double p2, double p3, double u) {
    const double u2 = u * u;
    const double u3 = u2 * u;
    return 0.5 * (2.0 * p1 + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3);
}

// One smooth scalar curve sampled at `frames` points.
std::vector<double> spline_curve(int frames, int stride, double amplitude, Rng& rng) {
    const int segments = (frames - 1) / stride + 1;
    std::vector<double> ctrl(static_cast<size_t>(segments) + 3);
    for (double& c : ctrl) c = rng.uniform(-amplitude, amplitude);
    std::vector<double> out(frames);
    for (int t = 0; t < frames; ++t) {
        const int s = t / stride;
        const double u = static_cast<double>(t - s * stride) / stride;
        out[t] = catmull_rom(ctrl[s], ctrl[s + 1], ctrl[s + 2], ctrl[s + 3], u);
    }
    return out;
}

std::string sequence_id(const char* split, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d", split, i);
    return buf;
}

io::Document sequence_document(const SequenceRecord& r) {
    io::Document doc;
    doc.kind = "arts.sequence";
    doc.set("frames", r.theta.rows());
    doc.put("theta", r.theta);
    doc.put("beta", r.beta.transpose());
    Mat mesh(r.theta.rows(), r.mesh.empty() ? 0 : 3 * r.mesh.front().rows());
    for (size_t t = 0; t < r.mesh.size(); ++t) mesh.row(static_cast<Eigen::Index>(t)) = r.mesh[t].reshaped<Eigen::RowMajor>().transpose();
    doc.put("mesh", mesh);
    doc.put("features", r.features.values);
    return doc;
}

}  // namespace

std::vector<std::vector<Rotation>> SequenceRecord::local_rotations() const {
    std::vector<std::vector<Rotation>> out;
    for (Eigen::Index t = 0; t < theta.rows(); ++t) out.push_back(rotations_from_theta(theta.row(t).transpose()));
    return out;
}

Mat random_pose_trajectory(const MiniBodyModel& model, int frames, Rng& rng, int stride) {
    require(frames >= 1 && stride >= 1, ErrorKind::invalid_argument, "random_pose_trajectory: bad frame count");
    const KinematicTree tree = model.tree();
    const Points rest = rest_joints(model, Vec::Zero(kShapeDim));
    Mat theta(frames, kPoseDim);
    for (int j = 0; j < model.joint_count(); ++j) {
        if (j != 0 && tree.children(j).empty()) {
            const Vec3 axis = tree.twist_axis(rest, j);
            const auto angle = spline_curve(frames, stride, kLeafTwistAmplitude, rng);
            for (int t = 0; t < frames; ++t) theta.block<1, 3>(t, 3 * j) = (angle[t] * axis).transpose();
            continue;
        }
        const double amplitude = j == 0 ? kRootAmplitude : kJointAmplitude;
        for (int a = 0; a < 3; ++a) {
            const auto curve = spline_curve(frames, stride, amplitude, rng);
            for (int t = 0; t < frames; ++t) theta(t, 3 * j + a) = curve[t];
        }
    }
    return theta;
}

SequenceRecord make_sequence(const MiniBodyModel& model, const std::string& id, const Mat& theta, const Vec& beta,
                             std::uint64_t feature_seed, int feature_width) {
    require(theta.cols() == kPoseDim && beta.size() == kShapeDim, ErrorKind::shape_mismatch,
            "make_sequence: parameter size mismatch");
    SequenceRecord r;
    r.id = id;
    r.theta = theta;
    r.beta = beta;
    const KinematicTree tree = model.tree();
    const Points rest = rest_joints(model, beta);
    const Points shaped = shaped_vertices(model, beta);
    const auto local = r.local_rotations();
    for (const auto& rots : local) {
        const FkResult fk = forward_kinematics(tree, rots, rest);
        r.skeleton.frames.push_back(fk.joints);
        r.mesh.push_back(skin_vertices(model, fk, rest, shaped));
    }
    r.features = synth_features(r.skeleton, feature_seed, feature_width, &local);
    return r;
}

Dataset generate_dataset(const DatasetConfig& config) {
    require(config.train_count >= 0 && config.test_count >= 0, ErrorKind::invalid_argument,
            "generate_dataset: sequence counts must be non-negative");
    require(config.sequence_length >= 3, ErrorKind::invalid_argument, "generate_dataset: sequences need >= 3 frames");
    Dataset ds;
    ds.config = config;
    ds.model = build_synthetic_model(config.seed, config.vertex_count);
    Rng rng(config.seed ^ 0xda7a5e7ULL);
    const auto make = [&](const char* split, int i) {
        Vec beta(kShapeDim);
        for (int s = 0; s < kShapeDim; ++s) beta[s] = rng.uniform(-2.0, 2.0);
        const Mat theta = random_pose_trajectory(ds.model, config.sequence_length, rng);
        return make_sequence(ds.model, sequence_id(split, i), theta, beta, rng.bits(), config.feature_width);
    };
    for (int i = 0; i < config.train_count; ++i) ds.train.push_back(make("train", i));
    for (int i = 0; i < config.test_count; ++i) ds.test.push_back(make("test", i));
    return ds;
}

TrainingSample to_training_sample(const SequenceRecord& record) {
    return TrainingSample{record.skeleton, record.features, record.local_rotations(), record.beta};
}

std::vector<TrainingSample> to_training_samples(const std::vector<SequenceRecord>& records) {
    std::vector<TrainingSample> out;
    for (const SequenceRecord& r : records) out.push_back(to_training_sample(r));
    return out;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    io::save(dir / "model.json", io::model_document(ds.model));
    io::Document manifest;
    manifest.kind = "arts.dataset";
    manifest.set("seed", static_cast<double>(ds.config.seed));
    manifest.set("train_count", ds.config.train_count);
    manifest.set("test_count", ds.config.test_count);
    manifest.set("sequence_length", ds.config.sequence_length);
    manifest.set("vertex_count", ds.config.vertex_count);
    manifest.set("feature_width", ds.config.feature_width);
    io::save(dir / "manifest.json", manifest);
    for (const auto* split : {&ds.train, &ds.test}) {
        for (const SequenceRecord& r : *split) {
            io::save(dir / "sequences" / (r.id + ".json"), sequence_document(r));
            io::write_text_file(dir / "sequences" / (r.id + ".skeleton.jsonl"), io::skeleton_to_jsonl(r.skeleton));
        }
    }
}

Dataset load_dataset(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), ErrorKind::io, "dataset directory not found: " + dir.string());
    Dataset ds;
    const io::Document manifest = io::load(dir / "manifest.json");
    require(manifest.kind == "arts.dataset", ErrorKind::parse, "manifest.json is not an arts.dataset document");
    ds.config.seed = static_cast<std::uint64_t>(manifest.attribute("seed"));
    ds.config.train_count = static_cast<int>(manifest.attribute("train_count"));
    ds.config.test_count = static_cast<int>(manifest.attribute("test_count"));
    ds.config.sequence_length = static_cast<int>(manifest.attribute("sequence_length"));
    ds.config.vertex_count = static_cast<int>(manifest.attribute("vertex_count"));
    ds.config.feature_width = static_cast<int>(manifest.attribute("feature_width"));
    ds.model = io::model_from_document(io::load(dir / "model.json"));

    const auto read = [&](const char* split, int i) {
        SequenceRecord r;
        r.id = sequence_id(split, i);
        const auto base = dir / "sequences" / r.id;
        const io::Document doc = io::load(base.string() + ".json");
        require(doc.kind == "arts.sequence", ErrorKind::parse, r.id + ": not an arts.sequence document");
        r.theta = doc.array("theta");
        r.beta = doc.array("beta").transpose();
        require(r.theta.cols() == kPoseDim && r.beta.size() == kShapeDim, ErrorKind::parse,
                r.id + ": parameter sizes are wrong");
        const Mat& mesh = doc.array("mesh");
        for (Eigen::Index t = 0; t < mesh.rows(); ++t) {
            r.mesh.push_back(mesh.row(t).reshaped<Eigen::RowMajor>(mesh.cols() / 3, 3));
        }
        r.features.values = doc.array("features");
        const std::string jsonl_path = base.string() + ".skeleton.jsonl";
        try {
            r.skeleton = io::skeleton_from_jsonl(io::read_text_file(jsonl_path));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::parse) fail(ErrorKind::parse, jsonl_path + ": " + e.what());
            throw;
        }
        require(r.skeleton.frame_count() == r.theta.rows() && r.features.frame_count() == r.theta.rows() &&
                    static_cast<Eigen::Index>(r.mesh.size()) == r.theta.rows(),
                ErrorKind::parse, r.id + ": frame counts disagree between files");
        return r;
    };
    for (int i = 0; i < ds.config.train_count; ++i) ds.train.push_back(read("train", i));
    for (int i = 0; i < ds.config.test_count; ++i) ds.test.push_back(read("test", i));
    return ds;
}

}  // namespace arts
