#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "arts/io.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(ARTS_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

int line_count(const fs::path& p) {
    std::ifstream in(p);
    int n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

}  // namespace

TEST_CASE("command line workflow: generate, train, fit, eval, ablate-noise") {
    const fs::path dir = fs::temp_directory_path() / "arts_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config = dir / "config.json";
    arts::io::write_text_file(config, R"({
  "seed": 3, "frames": 4, "sequence_length": 8, "train_count": 2, "test_count": 2,
  "feature_width": 32, "c1": 8, "c2": 8, "l1": 1, "l2": 1, "heads": 2,
  "twist_hidden": 8, "refine_hidden": 8, "iterations": 4, "lifter_iterations": 2, "batch": 2,
  "noise_levels": [0.0, 0.05], "noise_seeds": 2
})");
    const std::string cfg = " --config " + config.string();
    const fs::path data = dir / "data";

    REQUIRE(run("generate" + cfg + " -o " + data.string()) == 0);
    CHECK(fs::exists(data / "model.json"));
    CHECK(fs::exists(data / "manifest.json"));
    CHECK(fs::exists(data / "config.json"));

    REQUIRE(run("train" + cfg + " --data " + data.string() + " -o " + (dir / "train").string()) == 0);
    CHECK(fs::exists(dir / "train" / "checkpoint.json"));
    CHECK(first_line(dir / "train" / "loss.csv") == "stage,step,loss,fit_loss,mesh,joint,pose,shape");
    CHECK(line_count(dir / "train" / "loss.csv") == 1 + 2 + 4);
    const std::string ck = " --checkpoint " + (dir / "train" / "checkpoint.json").string();

    REQUIRE(run("fit" + cfg + " --data " + data.string() + ck + " -o " + (dir / "fit").string()) == 0);
    const std::string fit_header = first_line(dir / "fit" / "fit.csv");
    CHECK(fit_header.rfind("sequence,frame,mpjpe_mm,pa_mpjpe_mm,mpvpe_mm,beta_0", 0) == 0);
    CHECK(fit_header.find("theta_71,config_hash") != std::string::npos);
    CHECK(line_count(dir / "fit" / "fit.csv") == 1 + 2);

    // Fitting without a checkpoint uses a freshly initialized network.
    CHECK(run("fit" + cfg + " --data " + data.string() + " -o " + (dir / "fit0").string()) == 0);

    REQUIRE(run("eval" + cfg + " --data " + data.string() + ck + " -o " + (dir / "eval").string()) == 0);
    CHECK(first_line(dir / "eval" / "metrics.csv") == "sequence,mpjpe_mm,pa_mpjpe_mm,mpvpe_mm,accel,config_hash");
    CHECK(line_count(dir / "eval" / "metrics.csv") == 1 + 2 + 1);

    REQUIRE(run("eval" + cfg + " --use-lifter --data " + data.string() + ck + " -o " + (dir / "eval_lift").string()) == 0);

    REQUIRE(run("ablate-noise" + cfg + " --data " + data.string() + ck + " -o " + (dir / "ablate").string()) == 0);
    CHECK(first_line(dir / "ablate" / "ablation.csv") == "level,variant,mpjpe_mm,pa_mpjpe_mm,mpvpe_mm,accel,config_hash");
    CHECK(line_count(dir / "ablate" / "ablation.csv") == 1 + 2 * 2);

    // Same seed, same config: identical output.
    REQUIRE(run("eval" + cfg + " --data " + data.string() + ck + " -o " + (dir / "eval2").string()) == 0);
    CHECK(arts::io::read_text_file(dir / "eval" / "metrics.csv") == arts::io::read_text_file(dir / "eval2" / "metrics.csv"));

    fs::remove_all(dir);
}

TEST_CASE("command line errors map to exit codes") {
    const fs::path dir = fs::temp_directory_path() / "arts_cli_errors";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path bad_key = dir / "bad.json";
    arts::io::write_text_file(bad_key, R"({"frmaes": 4})");

    CHECK(run("") != 0);
    CHECK(run("generate") != 0);
    CHECK(run("generate --frames 2 -o " + (dir / "x").string()) == 2);
    CHECK(run("generate --config " + bad_key.string() + " -o " + (dir / "x").string()) == 6);
    CHECK(run("eval --data /nonexistent/arts --checkpoint /nonexistent/ck.json -o " + (dir / "y").string()) == 5);
    fs::remove_all(dir);
}
