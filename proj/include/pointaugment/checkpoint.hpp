#pragma once

#include <filesystem>

#include "pointaugment/trainer.hpp"

namespace pointaugment {

/// Binary snapshot of a TrainingState: config, parameters, optimizer moments,
/// RNG engine, replay pool and metric history, followed by a checksum.
/// Written to a temporary file and renamed into place.
void save_checkpoint(const TrainingState& state, const std::filesystem::path& path);

/// Throws LoadError on a missing file, bad magic, unsupported version,
/// truncation or checksum mismatch.
TrainingState load_checkpoint(const std::filesystem::path& path);

}  // namespace pointaugment
