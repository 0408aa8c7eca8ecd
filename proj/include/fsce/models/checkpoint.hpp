#pragma once

#include "fsce/models/fsl.hpp"
#include "fsce/models/switchnet.hpp"

#include <filesystem>

namespace fsce {

// Single-file checkpoint: 8-byte magic, u64 LE header length, JSON header
// (kind, config, named shapes, format version, config hash), then the named
// f64 LE arrays in header order.
void save_checkpoint(const std::filesystem::path& path, const FSLModel& model);
void save_checkpoint(const std::filesystem::path& path, const SwitchNetParams& params);

bool checkpoint_is_switchnet(const std::filesystem::path& path);
FSLModel load_fsl_checkpoint(const std::filesystem::path& path);
SwitchNetParams load_switchnet_checkpoint(const std::filesystem::path& path);

}  // namespace fsce
