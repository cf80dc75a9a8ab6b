#include "fsaudit/episode.hpp"

#include <algorithm>
#include <set>

#include "fsaudit/errors.hpp"

namespace fsaudit {

Episode sample_episode(const ImagePool& pool, int ways, int shots, int queries, Rng& rng) {
    if (ways < 1 || shots < 1 || queries < 0)
        throw ConfigError("sample_episode: ways/shots must be positive");
    const int need = shots + queries;

    std::vector<const ImagePool::value_type*> eligible;
    const ImagePool::value_type* best_short = nullptr;
    for (const auto& entry : pool) {
        if (static_cast<int>(entry.second.size()) >= need) {
            eligible.push_back(&entry);
        } else if (!best_short || entry.second.size() > best_short->second.size()) {
            best_short = &entry;
        }
    }
    if (static_cast<int>(eligible.size()) < ways) {
        std::string limit = best_short
                                ? "user '" + best_short->first + "' has only " +
                                      std::to_string(best_short->second.size()) +
                                      " images (need " + std::to_string(need) + ")"
                                : "pool has only " + std::to_string(eligible.size()) +
                                      " users";
        throw ConfigError("sample_episode: infeasible (k=" + std::to_string(ways) +
                          ", l=" + std::to_string(shots) + ", q=" +
                          std::to_string(queries) + "): " + limit);
    }

    Episode ep;
    ep.ways = ways;
    ep.shots = shots;
    ep.queries = queries;
    for (int idx : rng.sample_indices(static_cast<int>(eligible.size()), ways)) {
        const auto& [user, images] = *eligible[static_cast<std::size_t>(idx)];
        ep.way_users.push_back(user);
        std::vector<const FaceImage*> sup, qry;
        for (int j : rng.sample_indices(static_cast<int>(images.size()), need)) {
            if (static_cast<int>(sup.size()) < shots)
                sup.push_back(images[static_cast<std::size_t>(j)]);
            else
                qry.push_back(images[static_cast<std::size_t>(j)]);
        }
        ep.support.push_back(std::move(sup));
        ep.query.push_back(std::move(qry));
    }
    return ep;
}

void validate_episode(const Episode& ep) {
    std::set<std::string> users(ep.way_users.begin(), ep.way_users.end());
    if (static_cast<int>(users.size()) != ep.ways)
        throw DataError("episode: duplicate users across ways");
    for (int w = 0; w < ep.ways; ++w) {
        if (static_cast<int>(ep.support[static_cast<std::size_t>(w)].size()) != ep.shots)
            throw DataError("episode: way " + std::to_string(w) + " has wrong shot count");
        std::set<std::string> sup_ids;
        for (const auto* img : ep.support[static_cast<std::size_t>(w)])
            sup_ids.insert(img->image_id);
        for (const auto* img : ep.query[static_cast<std::size_t>(w)]) {
            if (img->user_id != ep.way_users[static_cast<std::size_t>(w)])
                throw DataError("episode: query from wrong user in way " + std::to_string(w));
            if (sup_ids.count(img->image_id))
                throw DataError("episode: image '" + img->image_id +
                                "' is both support and query");
        }
    }
}

}  // namespace fsaudit
