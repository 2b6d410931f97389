#pragma once

#include <filesystem>
#include <optional>

#include "arts/io.hpp"
#include "arts/lifter.hpp"
#include "arts/regressor.hpp"

namespace arts {

struct Checkpoint {
    Regressor regressor;
    std::optional<nn::LifterConfig> lifter_config;
    std::optional<nn::Lifter> lifter;
};

io::Document checkpoint_document(const Checkpoint& checkpoint);
// Rebuilds the architecture from the stored sizes and fills every parameter;
// a missing or mis-shaped parameter is a parse error.
Checkpoint checkpoint_from_document(const io::Document& doc, const MiniBodyModel& model);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path, const MiniBodyModel& model);

}  // namespace arts
