#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arts/commands.hpp"
#include "arts/error.hpp"

namespace {

// Flags mirror RunConfig; anything given on the command line overrides the
// config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> frames, sequence_length, train_count, test_count, vertex_count, feature_width;
    std::optional<int> c1, c2, l1, l2, heads, twist_hidden, refine_hidden;
    std::optional<double> learning_rate, shape_learning_rate, lifter_learning_rate;
    std::optional<int> iterations, lifter_iterations, batch, noise_seeds;
    std::optional<double> noise, train_noise, fps;
    std::vector<double> noise_levels;
    bool use_lifter = false;

    void add_to(CLI::App& app) {
        app.add_option("--seed", seed, "Random seed");
        app.add_option("--frames", frames, "Window length T");
        app.add_option("--sequence-length", sequence_length, "Frames per generated sequence");
        app.add_option("--train-count", train_count, "Generated training sequences");
        app.add_option("--test-count", test_count, "Generated test sequences");
        app.add_option("--vertex-count", vertex_count, "Body model vertex count");
        app.add_option("--feature-width", feature_width, "Per-frame feature width");
        app.add_option("--c1", c1, "Lifter width");
        app.add_option("--c2", c2, "Regressor width");
        app.add_option("--l1", l1, "Lifter depth");
        app.add_option("--l2", l2, "Cross-attention depth");
        app.add_option("--heads", heads, "Attention heads");
        app.add_option("--twist-hidden", twist_hidden, "Twist head hidden width");
        app.add_option("--refine-hidden", refine_hidden, "Refinement head hidden width");
        app.add_option("--lr", learning_rate, "Regressor learning rate");
        app.add_option("--shape-lr", shape_learning_rate, "Analytical-MLP learning rate");
        app.add_option("--lifter-lr", lifter_learning_rate, "Lifter learning rate");
        app.add_option("--iterations", iterations, "Regressor optimizer steps");
        app.add_option("--lifter-iterations", lifter_iterations, "Lifter optimizer steps");
        app.add_option("--batch", batch, "Windows per optimizer step");
        app.add_option("--noise", noise, "Input noise fraction p for fit/eval");
        app.add_option("--train-noise", train_noise, "Maximum noise fraction during training");
        app.add_option("--fps", fps, "Frame rate for Accel in mm/s^2");
        app.add_option("--noise-levels", noise_levels, "Noise fractions for ablate-noise")->delimiter(',');
        app.add_option("--noise-seeds", noise_seeds, "Noise draws per level for ablate-noise");
        app.add_flag("--use-lifter", use_lifter, "Feed lifted orthographic projections instead of skeletons");
    }

    void apply(arts::RunConfig& c) const {
        const auto set = [](auto& field, const auto& value) {
            if (value) field = *value;
        };
        set(c.seed, seed);
        set(c.frames, frames);
        set(c.sequence_length, sequence_length);
        set(c.train_count, train_count);
        set(c.test_count, test_count);
        set(c.vertex_count, vertex_count);
        set(c.feature_width, feature_width);
        set(c.c1, c1);
        set(c.c2, c2);
        set(c.l1, l1);
        set(c.l2, l2);
        set(c.heads, heads);
        set(c.twist_hidden, twist_hidden);
        set(c.refine_hidden, refine_hidden);
        set(c.learning_rate, learning_rate);
        set(c.shape_learning_rate, shape_learning_rate);
        set(c.lifter_learning_rate, lifter_learning_rate);
        set(c.iterations, iterations);
        set(c.lifter_iterations, lifter_iterations);
        set(c.batch, batch);
        set(c.noise_seeds, noise_seeds);
        set(c.noise, noise);
        set(c.train_noise, train_noise);
        if (fps) c.fps = *fps;
        if (!noise_levels.empty()) c.noise_levels = noise_levels;
        if (use_lifter) c.use_lifter = true;
    }
};

struct Verb {
    CLI::App* app = nullptr;
    std::string config_path;
    std::string out;
    std::string data;
    std::string checkpoint;
    Overrides overrides;
};

Verb& add_verb(CLI::App& root, std::vector<Verb>& verbs, const std::string& name, const std::string& help,
               bool needs_data, bool needs_checkpoint, bool optional_checkpoint) {
    Verb& v = verbs.emplace_back();
    v.app = root.add_subcommand(name, help);
    v.app->add_option("--config", v.config_path, "JSON config file")->check(CLI::ExistingFile);
    v.app->add_option("-o,--out", v.out, "Output directory")->required();
    if (needs_data) v.app->add_option("--data", v.data, "Dataset directory (from generate)")->required();
    if (needs_checkpoint || optional_checkpoint) {
        auto* opt = v.app->add_option("--checkpoint", v.checkpoint, "Checkpoint file (from train)");
        if (needs_checkpoint) opt->required();
    }
    v.overrides.add_to(*v.app);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-analytical body model fitting from 3D skeleton sequences"};
    app.require_subcommand(1);
    std::vector<Verb> verbs;
    verbs.reserve(5);
    add_verb(app, verbs, "generate", "Write a seeded synthetic dataset", false, false, false);
    add_verb(app, verbs, "fit", "Fit the mid frame of every test sequence", true, false, true);
    add_verb(app, verbs, "train", "Train the lifter, then the regressor", true, false, false);
    add_verb(app, verbs, "eval", "Report MPJPE, PA-MPJPE, MPVPE and Accel", true, true, false);
    add_verb(app, verbs, "ablate-noise", "Frame-wise IK vs temporal regressor under input noise", true, true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (Verb& v : verbs) {
            if (!v.app->parsed()) continue;
            arts::RunConfig config = v.config_path.empty() ? arts::RunConfig{} : arts::load_config(v.config_path);
            v.overrides.apply(config);
            config.validate();
            const std::string name = v.app->get_name();
            if (name == "generate") {
                arts::cmd_generate(config, v.out, std::cout);
            } else if (name == "fit") {
                std::optional<std::filesystem::path> ck;
                if (!v.checkpoint.empty()) ck = v.checkpoint;
                arts::cmd_fit(config, v.data, ck, v.out, std::cout);
            } else if (name == "train") {
                arts::cmd_train(config, v.data, v.out, std::cout);
            } else if (name == "eval") {
                arts::cmd_eval(config, v.data, v.checkpoint, v.out, std::cout);
            } else {
                arts::cmd_ablate_noise(config, v.data, v.checkpoint, v.out, std::cout);
            }
        }
    } catch (const arts::Error& e) {
        std::cerr << "error [" << arts::to_string(e.kind()) << "]: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
