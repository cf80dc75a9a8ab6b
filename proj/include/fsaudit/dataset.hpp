#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fsaudit/image.hpp"
#include "fsaudit/rng.hpp"

namespace fsaudit {

struct LoadResult {
    std::vector<IdentityRecord> records;
    int skipped_images = 0;  // undecodable files skipped with a warning
};

// Loads a folder-per-identity corpus: root/<user_id>/<image>.{png,jpg,jpeg}.
// Records are ordered lexicographically by user_id, images by filename.
// A missing root is fatal; an undecodable image is skipped and counted.
LoadResult load_dataset(const std::filesystem::path& root);

// Drops users with fewer than min_images images, down-samples the rest to
// `keep` images without replacement, and resizes everything to size x size.
std::vector<IdentityRecord> preprocess(const std::vector<IdentityRecord>& records,
                                       int min_images, int keep, int size, Rng& rng);

// Parametric face-like corpus so the pipeline runs without licensed data.
// Each identity gets a base pattern (oval face, eyes, mouth, and an
// identity-specific sinusoidal texture field); each image applies affine
// jitter, brightness/contrast jitter, and per-image pixel noise.
struct SyntheticSpec {
    int users = 40;
    int images_per_user = 20;
    int size = 32;
    std::uint64_t seed = 1;
    double max_rotation = 0.15;   // radians
    double max_translate = 2.0;   // pixels
    double max_scale_jitter = 0.08;
    double noise_lo = 0.03;       // per-image Gaussian pixel noise stddev range
    double noise_hi = 0.15;
    double brightness_jitter = 0.10;
    double contrast_jitter = 0.18;
    int texture_waves = 8;
};

std::vector<IdentityRecord> generate_synthetic(const SyntheticSpec& spec);

// Writes a corpus to disk in the folder-per-identity layout (PNG files).
void write_corpus(const std::vector<IdentityRecord>& records,
                  const std::filesystem::path& root);

}  // namespace fsaudit
