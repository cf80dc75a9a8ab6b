#include "fsaudit/split.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fsaudit/errors.hpp"

namespace fsaudit {

namespace {

SplitHalf build_half(const std::vector<const IdentityRecord*>& users, Rng& rng) {
    SplitHalf half;
    const int n = static_cast<int>(users.size());
    const int n_member = (n * 8) / 10;  // floor(0.8 * n)
    if (n_member < 1 || n - n_member < 1)
        throw DataError("split: half with " + std::to_string(n) +
                        " users leaves an empty member or nonmember cell");

    std::vector<int> order = rng.sample_indices(n, n);
    for (int i = 0; i < n; ++i) {
        const IdentityRecord* rec = users[static_cast<std::size_t>(order[i])];
        if (i < n_member)
            half.member_users.push_back(rec->user_id);
        else
            half.nonmember_users.push_back(rec->user_id);
        if (i < n_member) {
            const int m = static_cast<int>(rec->images.size());
            const int n_train = m / 2;  // floor(0.5 * m)
            if (n_train < 1 || m - n_train < 1)
                throw DataError("split: member user '" + rec->user_id +
                                "' has too few images to split train/nontrain");
            std::vector<int> img_order = rng.sample_indices(m, m);
            MemberImageSplit mis;
            for (int j = 0; j < m; ++j) {
                const auto& id = rec->images[static_cast<std::size_t>(img_order[j])].image_id;
                if (j < n_train)
                    mis.train_ids.push_back(id);
                else
                    mis.nontrain_ids.push_back(id);
            }
            std::sort(mis.train_ids.begin(), mis.train_ids.end());
            std::sort(mis.nontrain_ids.begin(), mis.nontrain_ids.end());
            half.member_images[rec->user_id] = std::move(mis);
        }
    }
    std::sort(half.member_users.begin(), half.member_users.end());
    std::sort(half.nonmember_users.begin(), half.nonmember_users.end());
    return half;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<IdentityRecord>& records, std::uint64_t seed) {
    const int n = static_cast<int>(records.size());
    if (n < 10)
        throw DataError("split: need at least 10 users so every cell is non-empty, got " +
                        std::to_string(n));
    Rng rng(derive_seed(seed, "split"));

    std::vector<int> order = rng.sample_indices(n, n);
    const int n_target = n / 2;  // floor(0.5 * n)
    std::vector<const IdentityRecord*> target_users, aux_users;
    for (int i = 0; i < n; ++i) {
        const IdentityRecord* rec = &records[static_cast<std::size_t>(order[i])];
        (i < n_target ? target_users : aux_users).push_back(rec);
    }

    DatasetSplit split;
    Rng target_rng = rng.fork("half", 0);
    Rng aux_rng = rng.fork("half", 1);
    split.target_half = build_half(target_users, target_rng);
    split.aux_half = build_half(aux_users, aux_rng);
    return split;
}

namespace {

void validate_half(const SplitHalf& half,
                   const std::map<std::string, const IdentityRecord*>& by_user,
                   const char* name) {
    std::set<std::string> members(half.member_users.begin(), half.member_users.end());
    std::set<std::string> nonmembers(half.nonmember_users.begin(),
                                     half.nonmember_users.end());
    for (const auto& u : members)
        if (nonmembers.count(u))
            throw DataError(std::string("split: user '") + u + "' is both member and "
                            "nonmember in " + name);
    for (const auto& [user, mis] : half.member_images) {
        if (!members.count(user))
            throw DataError("split: image split for non-member user '" + user + "'");
        std::set<std::string> train(mis.train_ids.begin(), mis.train_ids.end());
        for (const auto& id : mis.nontrain_ids)
            if (train.count(id))
                throw DataError("split: image '" + id + "' of user '" + user +
                                "' is both train and nontrain");
        auto it = by_user.find(user);
        if (it == by_user.end())
            throw DataError("split: unknown user '" + user + "'");
        if (mis.train_ids.size() + mis.nontrain_ids.size() != it->second->images.size())
            throw DataError("split: user '" + user + "' image partition incomplete");
    }
    for (const auto& u : members)
        if (!half.member_images.count(u))
            throw DataError("split: member user '" + u + "' missing image split");
}

}  // namespace

void validate_split(const DatasetSplit& split, const std::vector<IdentityRecord>& records) {
    const auto by_user = index_records(records);
    validate_half(split.target_half, by_user, "target half");
    validate_half(split.aux_half, by_user, "aux half");
    std::set<std::string> target_users(split.target_half.member_users.begin(),
                                       split.target_half.member_users.end());
    target_users.insert(split.target_half.nonmember_users.begin(),
                        split.target_half.nonmember_users.end());
    for (const auto& u : split.aux_half.member_users)
        if (target_users.count(u))
            throw DataError("split: user '" + u + "' appears in both halves");
    for (const auto& u : split.aux_half.nonmember_users)
        if (target_users.count(u))
            throw DataError("split: user '" + u + "' appears in both halves");
}

namespace {

void serialize_half(std::ostringstream& out, const SplitHalf& half, const char* name) {
    for (const auto& user : half.member_users) {
        const auto& mis = half.member_images.at(user);
        for (const auto& id : mis.train_ids)
            out << name << " train " << user << " " << id << "\n";
        for (const auto& id : mis.nontrain_ids)
            out << name << " nontrain " << user << " " << id << "\n";
    }
    for (const auto& user : half.nonmember_users)
        out << name << " nonmember " << user << " -\n";
}

}  // namespace

std::string serialize_split(const DatasetSplit& split) {
    std::ostringstream out;
    serialize_half(out, split.target_half, "target");
    serialize_half(out, split.aux_half, "aux");
    return out.str();
}

DatasetSplit parse_split(const std::string& text) {
    DatasetSplit split;
    std::istringstream in(text);
    std::string half_name, role, user, image;
    std::set<std::string> seen_members[2];
    while (in >> half_name >> role >> user >> image) {
        SplitHalf& half = half_name == "target" ? split.target_half : split.aux_half;
        const int hi = half_name == "target" ? 0 : 1;
        if (role == "nonmember") {
            half.nonmember_users.push_back(user);
        } else {
            if (!seen_members[hi].count(user)) {
                seen_members[hi].insert(user);
                half.member_users.push_back(user);
            }
            auto& mis = half.member_images[user];
            (role == "train" ? mis.train_ids : mis.nontrain_ids).push_back(image);
        }
    }
    return split;
}

void save_split(const DatasetSplit& split, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write split manifest to " + file.string());
    out << serialize_split(split);
}

DatasetSplit load_split(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot read split manifest from " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_split(buf.str());
}

std::map<std::string, const IdentityRecord*> index_records(
    const std::vector<IdentityRecord>& records) {
    std::map<std::string, const IdentityRecord*> by_user;
    for (const auto& rec : records) by_user[rec.user_id] = &rec;
    return by_user;
}

namespace {

const FaceImage* find_image(const IdentityRecord& rec, const std::string& image_id) {
    for (const auto& img : rec.images)
        if (img.image_id == image_id) return &img;
    throw DataError("split references missing image '" + image_id + "' of user '" +
                    rec.user_id + "'");
}

}  // namespace

ImagePool train_pool(const std::vector<IdentityRecord>& records, const SplitHalf& half) {
    const auto by_user = index_records(records);
    ImagePool pool;
    for (const auto& user : half.member_users) {
        const IdentityRecord* rec = by_user.at(user);
        for (const auto& id : half.member_images.at(user).train_ids)
            pool[user].push_back(find_image(*rec, id));
    }
    return pool;
}

ImagePool audit_pool(const std::vector<IdentityRecord>& records, const SplitHalf& half) {
    const auto by_user = index_records(records);
    ImagePool pool;
    for (const auto& user : half.member_users) {
        const IdentityRecord* rec = by_user.at(user);
        for (const auto& id : half.member_images.at(user).nontrain_ids)
            pool[user].push_back(find_image(*rec, id));
    }
    for (const auto& user : half.nonmember_users) {
        const IdentityRecord* rec = by_user.at(user);
        for (const auto& img : rec->images) pool[user].push_back(&img);
    }
    return pool;
}

ImagePool nonmember_pool(const std::vector<IdentityRecord>& records,
                         const DatasetSplit& split) {
    const auto by_user = index_records(records);
    ImagePool pool;
    for (const SplitHalf* half : {&split.target_half, &split.aux_half}) {
        for (const auto& user : half->nonmember_users) {
            const IdentityRecord* rec = by_user.at(user);
            for (const auto& img : rec->images) pool[user].push_back(&img);
        }
    }
    return pool;
}

}  // namespace fsaudit
