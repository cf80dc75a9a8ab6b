#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fsaudit/dataset.hpp"

namespace fsaudit {

// Per-member-user partition of images into model-training and held-out sets.
struct MemberImageSplit {
    std::vector<std::string> train_ids;
    std::vector<std::string> nontrain_ids;
};

struct SplitHalf {
    std::vector<std::string> member_users;
    std::vector<std::string> nonmember_users;
    std::map<std::string, MemberImageSplit> member_images;
};

// Nested split: users 50/50 into target and auxiliary halves, users 80/20
// into member/nonmember within each half, member images 50/50 into
// train/nontrain. Rounding is floor on the first-listed portion.
struct DatasetSplit {
    SplitHalf target_half;
    SplitHalf aux_half;
};

DatasetSplit split_dataset(const std::vector<IdentityRecord>& records,
                           std::uint64_t seed);

// Throws if any split invariant is violated (overlapping halves, image
// leakage between train and nontrain, count algebra).
void validate_split(const DatasetSplit& split,
                    const std::vector<IdentityRecord>& records);

// One record per line: half role user_id image_id. Deterministic ordering,
// so equal splits serialize byte-for-byte identically.
std::string serialize_split(const DatasetSplit& split);
DatasetSplit parse_split(const std::string& text);
void save_split(const DatasetSplit& split, const std::filesystem::path& file);
DatasetSplit load_split(const std::filesystem::path& file);

// Image pools (user -> images) backed by the records' storage.
using ImagePool = std::map<std::string, std::vector<const FaceImage*>>;

std::map<std::string, const IdentityRecord*> index_records(
    const std::vector<IdentityRecord>& records);

// Member users' training images: what the shadow/target model trains on.
ImagePool train_pool(const std::vector<IdentityRecord>& records, const SplitHalf& half);

// What the auditor can see in this half: member users' nontrain images plus
// all images of nonmember users.
ImagePool audit_pool(const std::vector<IdentityRecord>& records, const SplitHalf& half);

// Users never seen by either model: nonmember users from both halves.
// Used for test-accuracy episodes on unseen identities.
ImagePool nonmember_pool(const std::vector<IdentityRecord>& records,
                         const DatasetSplit& split);

}  // namespace fsaudit
