#pragma once

#include <filesystem>
#include <optional>
#include <ostream>

#include "arts/config.hpp"

namespace arts {

// Every command writes its artifacts under `out` and a one-line summary per
// stage to `log`.

// model.json, manifest.json, sequences/*.
void cmd_generate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

// fit.csv: mid-frame fit of every test sequence. Without a checkpoint the
// network is freshly initialized from config.seed.
void cmd_fit(const RunConfig& config, const std::filesystem::path& data,
             const std::optional<std::filesystem::path>& checkpoint, const std::filesystem::path& out,
             std::ostream& log);

// checkpoint.json and loss.csv (stage 1 lifter, stage 2 regressor).
void cmd_train(const RunConfig& config, const std::filesystem::path& data, const std::filesystem::path& out,
               std::ostream& log);

// metrics.csv: one row per test sequence plus a "mean" row.
void cmd_eval(const RunConfig& config, const std::filesystem::path& data, const std::filesystem::path& checkpoint,
              const std::filesystem::path& out, std::ostream& log);

// ablation.csv: one row per (noise level, variant).
void cmd_ablate_noise(const RunConfig& config, const std::filesystem::path& data,
                      const std::filesystem::path& checkpoint, const std::filesystem::path& out, std::ostream& log);

}  // namespace arts
