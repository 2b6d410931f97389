#include "doctest.h"

#include <filesystem>
#include <limits>

#include "arts/checkpoint.hpp"
#include "arts/config.hpp"
#include "arts/dataset.hpp"
#include "arts/error.hpp"
#include "arts/io.hpp"
#include "oracles.hpp"

using namespace arts;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("arts_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an arts::Error");
    return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("documents round trip bit-exactly") {
    Rng rng(1);
    io::Document doc;
    doc.kind = "test";
    doc.set("alpha", 0.1);
    doc.set("tiny", 1e-300);
    doc.put("m", oracle::random_mat(3, 4, rng));
    doc.put("empty", Mat(0, 2));
    const io::Document back = io::from_text(io::to_text(doc));
    CHECK(back.kind == "test");
    CHECK(back.attribute("alpha") == 0.1);
    CHECK(back.attribute("tiny") == 1e-300);
    CHECK(back.array("m") == doc.array("m"));
    CHECK(back.array("empty").rows() == 0);
    CHECK(back.arrays().front().first == "m");
    CHECK(kind_of([&] { back.attribute("missing"); }) == ErrorKind::parse);
    CHECK(kind_of([] { io::from_text("{not json"); }) == ErrorKind::parse);
    CHECK(kind_of([] { io::from_text(R"({"kind":"x","attributes":{},"arrays":[{"name":"a","shape":[2,2],"data":[1]}]})"); }) ==
          ErrorKind::parse);
}

TEST_CASE("body model documents round trip") {
    const MiniBodyModel m = build_synthetic_model(4, 100);
    const MiniBodyModel back = io::model_from_document(io::from_text(io::to_text(io::model_document(m))));
    CHECK(back.template_vertices == m.template_vertices);
    CHECK(back.shape_blend == m.shape_blend);
    CHECK(back.parents == m.parents);
    io::Document wrong = io::model_document(m);
    wrong.kind = "other";
    CHECK(kind_of([&] { io::model_from_document(wrong); }) == ErrorKind::parse);
}

TEST_CASE("skeleton JSON lines round trip and report bad lines") {
    Rng rng(2);
    SkeletonSequence seq;
    for (int t = 0; t < 3; ++t) seq.frames.push_back(oracle::random_points(24, rng));
    const SkeletonSequence back = io::skeleton_from_jsonl(io::skeleton_to_jsonl(seq));
    REQUIRE(back.frame_count() == 3);
    for (int t = 0; t < 3; ++t) CHECK(back.frames[t] == seq.frames[t]);

    const std::string bad = "{\"frame\": 0, \"joints\": [0, 0, 0]}\n{\"frame\": 1, \"joints\": [0, 0]}\n";
    try {
        io::skeleton_from_jsonl(bad);
        FAIL("expected a parse error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(kind_of([] { io::skeleton_from_jsonl("{\"frame\": 3, \"joints\": [0, 0, 0]}\n"); }) == ErrorKind::parse);
}

TEST_CASE("CSV writer enforces its header width") {
    io::CsvWriter csv({"a", "b"});
    csv.row({"1", "2"});
    CHECK(csv.text() == "a,b\n1,2\n");
    CHECK(kind_of([&] { csv.row({"1"}); }) == ErrorKind::shape_mismatch);
    CHECK(kind_of([&] { csv.row({"1,2", "3"}); }) == ErrorKind::invalid_argument);
}

TEST_CASE("reading a missing file is an io error") {
    CHECK(kind_of([] { io::read_text_file("/nonexistent/arts/file.json"); }) == ErrorKind::io);
}

TEST_CASE("config parsing is strict and round trips") {
    RunConfig c;
    c.seed = 42;
    c.fps = 30.0;
    c.noise_levels = {0.0, 0.05};
    const RunConfig back = config_from_json_text(config_to_json_text(c));
    CHECK(back.seed == 42);
    CHECK(back.fps.value() == 30.0);
    CHECK(back.noise_levels == c.noise_levels);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(back).size() == 16);

    RunConfig other = c;
    other.learning_rate = 2e-3;
    CHECK(config_hash(other) != config_hash(c));

    CHECK(kind_of([] { config_from_json_text(R"({"sed": 1})"); }) == ErrorKind::parse);
    CHECK(kind_of([] { config_from_json_text(R"({"frames": "16"})"); }) == ErrorKind::parse);
    CHECK(kind_of([] { config_from_json_text(R"({"frames": 1.5})"); }) == ErrorKind::parse);
    CHECK(kind_of([] { config_from_json_text(R"({"frames": 2})"); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { config_from_json_text(R"({"c2": 30, "heads": 8})"); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([] { config_from_json_text("[1, 2]"); }) == ErrorKind::parse);
}

TEST_CASE("checkpoints restore every parameter") {
    const MiniBodyModel m = build_synthetic_model(5, 96);
    RegressorConfig rc;
    rc.frames = 4;
    rc.feature_width = 16;
    rc.width = 8;
    rc.heads = 2;
    rc.twist_hidden = 8;
    rc.refine_hidden = 8;
    nn::LifterConfig lc;
    lc.frames = 4;
    lc.width = 8;
    lc.depth = 1;
    lc.heads = 2;
    lc.ffn_hidden = 8;
    Rng rng(3);
    Checkpoint ck{Regressor::init(rc, m, 1), lc, nn::Lifter::init(lc, rng)};
    const fs::path dir = scratch_dir("checkpoint");
    save_checkpoint(dir / "ck.json", ck);
    const Checkpoint back = load_checkpoint(dir / "ck.json", m);
    const auto a = nn::parameters(ck.regressor);
    const auto b = nn::parameters(back.regressor);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    REQUIRE(back.lifter.has_value());
    CHECK(back.lifter->head.weight == ck.lifter->head.weight);
    CHECK(back.regressor.config.width == 8);

    io::Document doc = checkpoint_document(ck);
    doc.put("regressor.tik.pose_head.0.weight", Mat::Zero(2, 2));
    CHECK(kind_of([&] { checkpoint_from_document(doc, m); }) == ErrorKind::parse);
    fs::remove_all(dir);
}

TEST_CASE("datasets are deterministic and round trip through disk") {
    DatasetConfig c;
    c.seed = 9;
    c.train_count = 2;
    c.test_count = 1;
    c.sequence_length = 6;
    c.feature_width = 16;
    const Dataset a = generate_dataset(c);
    const Dataset b = generate_dataset(c);
    CHECK(a.train[1].theta == b.train[1].theta);
    CHECK(a.test[0].features.values == b.test[0].features.values);
    // Skeletons are the posed joints of the stored parameters.
    const SequenceRecord& r = a.train[0];
    const auto local = r.local_rotations();
    const Points joints = forward_kinematics(a.model.tree(), local[2], rest_joints(a.model, r.beta)).joints;
    CHECK((joints - r.skeleton.frames[2]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((skin_mesh(a.model, local[2], r.beta) - r.mesh[2]).cwiseAbs().maxCoeff() < 1e-12);

    const fs::path dir = scratch_dir("dataset");
    save_dataset(dir, a);
    const Dataset back = load_dataset(dir);
    CHECK(back.train.size() == 2);
    CHECK(back.test.size() == 1);
    CHECK(back.train[1].theta == a.train[1].theta);
    CHECK(back.train[1].beta == a.train[1].beta);
    CHECK(back.test[0].skeleton.frames[3] == a.test[0].skeleton.frames[3]);
    CHECK(back.test[0].features.values == a.test[0].features.values);
    CHECK(back.model.shape_blend == a.model.shape_blend);
    CHECK(kind_of([] { load_dataset("/nonexistent/arts/data"); }) == ErrorKind::io);
    fs::remove_all(dir);
}
