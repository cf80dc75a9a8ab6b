#include "fsaudit/dataset.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>

namespace fsaudit {

namespace fs = std::filesystem;

namespace {

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

bool decode_image(const fs::path& file, FaceImage& out) {
    cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) return false;
    out.height = bgr.rows;
    out.width = bgr.cols;
    out.pixels.resize(static_cast<std::size_t>(FaceImage::kChannels) * bgr.rows * bgr.cols);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            // OpenCV decodes BGR; store RGB.
            out.at(0, y, x) = row[x][2] / 255.0f;
            out.at(1, y, x) = row[x][1] / 255.0f;
            out.at(2, y, x) = row[x][0] / 255.0f;
        }
    }
    return true;
}

}  // namespace

LoadResult load_dataset(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root))
        throw ConfigError("dataset root '" + root.string() + "' does not exist");

    std::vector<fs::path> user_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) user_dirs.push_back(entry.path());
    }
    std::sort(user_dirs.begin(), user_dirs.end());

    LoadResult result;
    for (const auto& dir : user_dirs) {
        IdentityRecord rec;
        rec.user_id = dir.filename().string();

        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && has_image_extension(entry.path()))
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        for (const auto& file : files) {
            FaceImage img;
            if (!decode_image(file, img)) {
                ++result.skipped_images;
                std::cerr << "warning: skipping undecodable image " << file << "\n";
                continue;
            }
            img.user_id = rec.user_id;
            img.image_id = file.filename().string();
            rec.images.push_back(std::move(img));
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

std::vector<IdentityRecord> preprocess(const std::vector<IdentityRecord>& records,
                                       int min_images, int keep, int size, Rng& rng) {
    if (keep > min_images)
        throw ConfigError("preprocess: keep (" + std::to_string(keep) +
                          ") exceeds min_images (" + std::to_string(min_images) + ")");
    std::vector<IdentityRecord> out;
    for (const auto& rec : records) {
        const int n = static_cast<int>(rec.images.size());
        if (n < min_images) continue;
        IdentityRecord kept;
        kept.user_id = rec.user_id;
        if (n == keep) {
            kept.images = rec.images;
        } else {
            for (int i : rng.sample_indices(n, keep))
                kept.images.push_back(rec.images[static_cast<std::size_t>(i)]);
        }
        for (auto& img : kept.images) img = resize_bilinear(img, size);
        out.push_back(std::move(kept));
    }
    return out;
}

namespace {

struct IdentityPattern {
    double face_cx, face_cy, face_rx, face_ry;
    double eye_dx, eye_y, eye_r;
    double mouth_y, mouth_w, mouth_curve;
    float skin[3], bg[3], eye_tone, mouth_tone;
    struct Wave {
        double u, v, phase, amp;
        int channel;
    };
    std::vector<Wave> waves;
};

// Identities share the background and a narrow skin-tone band; the
// discriminative signal is mostly the per-identity texture field plus
// subtle geometry, so recognizers must learn fine features rather than
// trivially separable palettes.
IdentityPattern draw_identity(Rng& rng, int waves) {
    IdentityPattern p;
    p.face_cx = rng.uniform(0.46, 0.54);
    p.face_cy = rng.uniform(0.46, 0.54);
    p.face_rx = rng.uniform(0.28, 0.34);
    p.face_ry = rng.uniform(0.34, 0.40);
    p.eye_dx = rng.uniform(0.11, 0.15);
    p.eye_y = rng.uniform(-0.12, -0.08);
    p.eye_r = rng.uniform(0.03, 0.045);
    p.mouth_y = rng.uniform(0.13, 0.18);
    p.mouth_w = rng.uniform(0.09, 0.14);
    p.mouth_curve = rng.uniform(-0.04, 0.04);
    p.bg[0] = 0.18f;
    p.bg[1] = 0.20f;
    p.bg[2] = 0.24f;
    for (int c = 0; c < 3; ++c) p.skin[c] = static_cast<float>(rng.uniform(0.50, 0.72));
    p.eye_tone = static_cast<float>(rng.uniform(0.05, 0.20));
    p.mouth_tone = static_cast<float>(rng.uniform(0.10, 0.35));
    for (int i = 0; i < waves; ++i) {
        IdentityPattern::Wave w;
        w.u = rng.uniform(2.0, 9.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        w.v = rng.uniform(2.0, 9.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        w.amp = rng.uniform(0.05, 0.12);
        w.channel = rng.uniform_int(0, 2);
        p.waves.push_back(w);
    }
    return p;
}

FaceImage render_base(const IdentityPattern& p, int size) {
    FaceImage img = make_image(size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double nx = (x + 0.5) / size - p.face_cx;
            const double ny = (y + 0.5) / size - p.face_cy;
            const double face = (nx * nx) / (p.face_rx * p.face_rx) +
                                (ny * ny) / (p.face_ry * p.face_ry);
            const bool inside = face <= 1.0;
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = inside ? p.skin[c] : p.bg[c];
            if (inside) {
                const double el = (nx + p.eye_dx) * (nx + p.eye_dx) +
                                  (ny - p.eye_y) * (ny - p.eye_y);
                const double er = (nx - p.eye_dx) * (nx - p.eye_dx) +
                                  (ny - p.eye_y) * (ny - p.eye_y);
                if (el < p.eye_r * p.eye_r || er < p.eye_r * p.eye_r)
                    for (int c = 0; c < 3; ++c) img.at(c, y, x) = p.eye_tone;
                const double mouth_dy = ny - p.mouth_y - p.mouth_curve * (nx * nx) / 0.02;
                if (std::abs(nx) < p.mouth_w && std::abs(mouth_dy) < 0.02) {
                    img.at(0, y, x) = p.mouth_tone + 0.3f;
                    img.at(1, y, x) = p.mouth_tone;
                    img.at(2, y, x) = p.mouth_tone;
                }
            }
            for (const auto& w : p.waves) {
                const double t =
                    w.amp * std::sin(2.0 * M_PI * (w.u * (x + 0.5) / size +
                                                   w.v * (y + 0.5) / size) +
                                     w.phase);
                img.at(w.channel, y, x) += static_cast<float>(t);
            }
        }
    }
    clamp_pixels(img);
    return img;
}

}  // namespace

std::vector<IdentityRecord> generate_synthetic(const SyntheticSpec& spec) {
    std::vector<IdentityRecord> records;
    records.reserve(static_cast<std::size_t>(spec.users));
    for (int u = 0; u < spec.users; ++u) {
        Rng id_rng(derive_seed(spec.seed, "synthetic_identity", static_cast<std::uint64_t>(u)));
        const IdentityPattern pattern = draw_identity(id_rng, spec.texture_waves);
        const FaceImage base = render_base(pattern, spec.size);

        IdentityRecord rec;
        char uid[16];
        std::snprintf(uid, sizeof(uid), "id%04d", u);
        rec.user_id = uid;

        for (int i = 0; i < spec.images_per_user; ++i) {
            Rng img_rng(derive_seed(spec.seed, "synthetic_image",
                                    static_cast<std::uint64_t>(u) * 0x10000ull +
                                        static_cast<std::uint64_t>(i)));
            const double rot = img_rng.uniform(-spec.max_rotation, spec.max_rotation);
            const double scale = 1.0 + img_rng.uniform(-spec.max_scale_jitter,
                                                       spec.max_scale_jitter);
            const double tx = img_rng.uniform(-spec.max_translate, spec.max_translate);
            const double ty = img_rng.uniform(-spec.max_translate, spec.max_translate);
            FaceImage img = warp_affine(base, rot, scale, tx, ty);

            const double contrast =
                1.0 + img_rng.uniform(-spec.contrast_jitter, spec.contrast_jitter);
            const double brightness =
                img_rng.uniform(-spec.brightness_jitter, spec.brightness_jitter);
            const double noise = img_rng.uniform(spec.noise_lo, spec.noise_hi);
            for (float& v : img.pixels) {
                const double jittered = (v - 0.5) * contrast + 0.5 + brightness +
                                        noise * img_rng.normal();
                v = static_cast<float>(jittered);
            }
            clamp_pixels(img);
            img.user_id = rec.user_id;
            char iid[16];
            std::snprintf(iid, sizeof(iid), "img%04d", i);
            img.image_id = iid;
            rec.images.push_back(std::move(img));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_corpus(const std::vector<IdentityRecord>& records, const fs::path& root) {
    fs::create_directories(root);
    for (const auto& rec : records) {
        const fs::path dir = root / rec.user_id;
        fs::create_directories(dir);
        for (const auto& img : rec.images) {
            cv::Mat bgr(img.height, img.width, CV_8UC3);
            for (int y = 0; y < img.height; ++y) {
                auto* row = bgr.ptr<cv::Vec3b>(y);
                for (int x = 0; x < img.width; ++x) {
                    row[x][2] = static_cast<unsigned char>(
                        std::lround(std::clamp(img.at(0, y, x), 0.0f, 1.0f) * 255.0f));
                    row[x][1] = static_cast<unsigned char>(
                        std::lround(std::clamp(img.at(1, y, x), 0.0f, 1.0f) * 255.0f));
                    row[x][0] = static_cast<unsigned char>(
                        std::lround(std::clamp(img.at(2, y, x), 0.0f, 1.0f) * 255.0f));
                }
            }
            std::string name = img.image_id;
            if (name.size() < 4 || name.substr(name.size() - 4) != ".png") name += ".png";
            cv::imwrite((dir / name).string(), bgr);
        }
    }
}

}  // namespace fsaudit
