#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "emtrack/appearance.hpp"
#include "emtrack/scorer.hpp"

namespace emtrack {

// Versioned text container for trained parameters. Values are printed with
// %.17g so a save/load round trip is bit exact. The config block echoes the
// training settings as whitespace-free key/value pairs.
struct Checkpoint {
  ScorerParams scorer;
  std::optional<AppearanceHead> appearance;
  std::vector<std::pair<std::string, std::string>> config;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace emtrack
