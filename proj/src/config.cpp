#include "arts/config.hpp"

#include <cstdio>

#include "arts/error.hpp"
#include "arts/io.hpp"
#include "json.hpp"

namespace arts {

using nlohmann::json;

void RunConfig::validate() const {
    const auto check = [](bool ok, const char* what) { require(ok, ErrorKind::invalid_argument, what); };
    check(frames >= 3, "frames (T) must be at least 3");
    check(sequence_length >= 3, "sequence_length must be at least 3");
    check(train_count >= 1 && test_count >= 1, "train_count and test_count must be positive");
    check(vertex_count >= 4 * kJointCount, "vertex_count must be at least 96");
    check(feature_width > 0, "feature_width must be positive");
    check(c1 > 0 && c2 > 0 && l1 > 0 && l2 > 0 && heads > 0, "widths, depths and heads must be positive");
    check(c1 % heads == 0 && c2 % heads == 0, "c1 and c2 must be divisible by heads");
    check(twist_hidden > 0 && refine_hidden > 0, "hidden widths must be positive");
    check(learning_rate > 0.0 && shape_learning_rate > 0.0 && lifter_learning_rate > 0.0, "learning rates must be positive");
    check(iterations >= 0 && lifter_iterations >= 0, "iteration counts must be non-negative");
    check(batch > 0, "batch must be positive");
    check(noise >= 0.0 && train_noise >= 0.0, "noise fractions must be non-negative");
    check(!fps || *fps > 0.0, "fps must be positive");
    check(!noise_levels.empty(), "noise_levels must not be empty");
    for (double p : noise_levels) check(p >= 0.0, "noise levels must be non-negative");
    check(noise_seeds > 0, "noise_seeds must be positive");
}

DatasetConfig RunConfig::dataset() const {
    return DatasetConfig{seed, train_count, test_count, sequence_length, vertex_count, feature_width};
}

RegressorConfig RunConfig::regressor() const {
    RegressorConfig r;
    r.frames = frames;
    r.feature_width = feature_width;
    r.width = c2;
    r.depth = l2;
    r.heads = heads;
    r.twist_hidden = twist_hidden;
    r.refine_hidden = refine_hidden;
    return r;
}

nn::LifterConfig RunConfig::lifter() const {
    nn::LifterConfig l;
    l.frames = frames;
    l.width = c1;
    l.depth = l1;
    l.heads = heads;
    l.ffn_hidden = 2 * c1;
    return l;
}

RegressorTraining RunConfig::regressor_training() const {
    RegressorTraining t;
    t.steps = iterations;
    t.batch = batch;
    t.learning_rate = learning_rate;
    t.shape_learning_rate = shape_learning_rate;
    t.noise = train_noise;
    t.seed = seed + 2;
    return t;
}

LifterTraining RunConfig::lifter_training() const {
    LifterTraining t;
    t.steps = lifter_iterations;
    t.batch = batch;
    t.learning_rate = lifter_learning_rate;
    t.seed = seed + 1;
    return t;
}

namespace {

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["frames"] = c.frames;
    j["sequence_length"] = c.sequence_length;
    j["train_count"] = c.train_count;
    j["test_count"] = c.test_count;
    j["vertex_count"] = c.vertex_count;
    j["feature_width"] = c.feature_width;
    j["c1"] = c.c1;
    j["c2"] = c.c2;
    j["l1"] = c.l1;
    j["l2"] = c.l2;
    j["heads"] = c.heads;
    j["twist_hidden"] = c.twist_hidden;
    j["refine_hidden"] = c.refine_hidden;
    j["learning_rate"] = c.learning_rate;
    j["shape_learning_rate"] = c.shape_learning_rate;
    j["lifter_learning_rate"] = c.lifter_learning_rate;
    j["iterations"] = c.iterations;
    j["lifter_iterations"] = c.lifter_iterations;
    j["batch"] = c.batch;
    j["noise"] = c.noise;
    j["train_noise"] = c.train_noise;
    j["fps"] = c.fps ? json(*c.fps) : json(nullptr);
    j["noise_levels"] = c.noise_levels;
    j["noise_seeds"] = c.noise_seeds;
    j["use_lifter"] = c.use_lifter;
    return j;
}

template <class T>
void read_number(const json& v, const std::string& key, T& out) {
    if constexpr (std::is_same_v<T, bool>) {
        require(v.is_boolean(), ErrorKind::parse, "config key '" + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
        require(v.is_number_integer(), ErrorKind::parse, "config key '" + key + "' must be an integer");
        if constexpr (std::is_unsigned_v<T>) {
            require(v.is_number_unsigned() || v.get<long long>() >= 0, ErrorKind::parse,
                    "config key '" + key + "' must be non-negative");
        }
    } else {
        require(v.is_number(), ErrorKind::parse, "config key '" + key + "' must be a number");
    }
    out = v.get<T>();
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, std::string("malformed config: ") + e.what());
    }
    require(j.is_object(), ErrorKind::parse, "config must be a JSON object");
    RunConfig c;
    for (const auto& [key, v] : j.items()) {
        if (key == "seed") read_number(v, key, c.seed);
        else if (key == "frames") read_number(v, key, c.frames);
        else if (key == "sequence_length") read_number(v, key, c.sequence_length);
        else if (key == "train_count") read_number(v, key, c.train_count);
        else if (key == "test_count") read_number(v, key, c.test_count);
        else if (key == "vertex_count") read_number(v, key, c.vertex_count);
        else if (key == "feature_width") read_number(v, key, c.feature_width);
        else if (key == "c1") read_number(v, key, c.c1);
        else if (key == "c2") read_number(v, key, c.c2);
        else if (key == "l1") read_number(v, key, c.l1);
        else if (key == "l2") read_number(v, key, c.l2);
        else if (key == "heads") read_number(v, key, c.heads);
        else if (key == "twist_hidden") read_number(v, key, c.twist_hidden);
        else if (key == "refine_hidden") read_number(v, key, c.refine_hidden);
        else if (key == "learning_rate") read_number(v, key, c.learning_rate);
        else if (key == "shape_learning_rate") read_number(v, key, c.shape_learning_rate);
        else if (key == "lifter_learning_rate") read_number(v, key, c.lifter_learning_rate);
        else if (key == "iterations") read_number(v, key, c.iterations);
        else if (key == "lifter_iterations") read_number(v, key, c.lifter_iterations);
        else if (key == "batch") read_number(v, key, c.batch);
        else if (key == "noise") read_number(v, key, c.noise);
        else if (key == "train_noise") read_number(v, key, c.train_noise);
        else if (key == "noise_seeds") read_number(v, key, c.noise_seeds);
        else if (key == "use_lifter") read_number(v, key, c.use_lifter);
        else if (key == "fps") {
            if (v.is_null()) {
                c.fps.reset();
            } else {
                double fps = 0.0;
                read_number(v, key, fps);
                c.fps = fps;
            }
        } else if (key == "noise_levels") {
            require(v.is_array(), ErrorKind::parse, "config key 'noise_levels' must be an array");
            c.noise_levels.clear();
            for (const json& p : v) {
                double level = 0.0;
                read_number(p, key, level);
                c.noise_levels.push_back(level);
            }
        } else {
            fail(ErrorKind::parse, "unknown config key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    try {
        return config_from_json_text(io::read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::parse) fail(ErrorKind::parse, path.string() + ": " + e.what());
        throw;
    }
}

std::string config_to_json_text(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
    const std::string canonical = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace arts
