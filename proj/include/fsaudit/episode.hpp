#pragma once

#include <string>
#include <vector>

#include "fsaudit/split.hpp"

namespace fsaudit {

// k-way-l-shot episode with q query images per way. Support and query images
// of a way never overlap; ways are distinct users.
struct Episode {
    int ways = 0;
    int shots = 0;
    int queries = 0;
    std::vector<std::string> way_users;
    std::vector<std::vector<const FaceImage*>> support;  // [way][shot]
    std::vector<std::vector<const FaceImage*>> query;    // [way][query]
};

// Samples uniformly over users with at least shots+queries images; per-user
// images are drawn without replacement.
Episode sample_episode(const ImagePool& pool, int ways, int shots, int queries, Rng& rng);

void validate_episode(const Episode& ep);

}  // namespace fsaudit
