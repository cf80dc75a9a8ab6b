#pragma once

#include <filesystem>
#include <memory>

#include "fsaudit/models.hpp"

namespace fsaudit {

// Self-describing archive: kind, architecture config, init seed, loss
// history, parameter arrays, and normalization state.
void save_model(FewShotModel& model, const std::filesystem::path& path);

std::unique_ptr<FewShotModel> load_model(const std::filesystem::path& path);

// Throws CheckpointError when the archive holds a different model kind.
std::unique_ptr<FewShotModel> load_model(const std::filesystem::path& path,
                                         ModelKind expected);

}  // namespace fsaudit
