#include "easynet/dataset.hpp"

#include "easynet/error.hpp"
#include "easynet/raster_io.hpp"

#include <algorithm>

namespace fs = std::filesystem;

namespace easynet {

const char* to_string(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
    }
    return "?";
}

void DataConfig::validate() const {
    if (input_size < 2) throw ConfigError("data: input_size must be >= 2");
    if (!(foreground_floor > 0.0 && foreground_floor <= 1.0)) throw ConfigError("data: foreground_floor must be in (0, 1]");
    ransac.validate();
}

std::vector<std::string> list_categories(const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::is_directory(root)) return out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) out.push_back(entry.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& ext) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Tensor to_gray(const Tensor& image) {
    if (image.c() == 1) return image;
    Tensor out({1, 1, image.h(), image.w()});
    const std::size_t plane = image.shape().plane();
    for (std::size_t i = 0; i < plane; ++i) {
        out[i] = std::max({image.plane(0, 0)[i], image.plane(0, 1)[i], image.plane(0, 2)[i]});
    }
    return out;
}

Tensor to_rgb(const Tensor& image) {
    if (image.c() == 3) return image;
    const Tensor* parts[3] = {&image, &image, &image};
    return concat_channels(parts);
}

} // namespace

std::vector<RgbdSample> load_mvtec3d(const DataConfig& cfg, const std::string& category, Split split,
                                     std::vector<std::string>* warnings) {
    cfg.validate();
    std::vector<RgbdSample> samples;
    const fs::path split_dir = cfg.root / category / to_string(split);
    auto warn = [&](const std::string& msg) {
        if (warnings != nullptr) warnings->push_back(msg);
    };
    if (!fs::is_directory(split_dir)) {
        warn("no " + std::string(to_string(split)) + " split at " + split_dir.string());
        return samples;
    }
    std::vector<std::string> defects;
    for (const auto& entry : fs::directory_iterator(split_dir)) {
        if (entry.is_directory()) defects.push_back(entry.path().filename().string());
    }
    std::sort(defects.begin(), defects.end());
    const int s = cfg.input_size;

    for (const std::string& defect : defects) {
        const bool good = defect == "good";
        if (split == Split::train && !good) {
            throw DataContractError("train split of " + category + " contains defect directory '" + defect + "'");
        }
        const fs::path base = split_dir / defect;
        for (const fs::path& rgb_path : sorted_files(base / "rgb", ".png")) {
            const std::string stem = rgb_path.stem().string();
            const fs::path xyz_path = base / "xyz" / (stem + ".tiff");
            if (!fs::exists(xyz_path)) throw IoError("missing point map for " + rgb_path.string() + ": " + xyz_path.string());

            RgbdSample sample;
            sample.category = category;
            sample.defect = defect;
            sample.id = defect + "/" + stem;
            sample.label = good ? Label::normal : Label::anomalous;
            sample.rgb = resize_bilinear(to_rgb(read_png(rgb_path)), s, s);
            const Tensor xyz = resize_nearest(read_xyz_tiff(xyz_path), s, s);
            sample.depth = ransac_plane_removal(xyz, cfg.ransac, cfg.foreground_floor).depth;

            const fs::path gt_path = base / "gt" / (stem + ".png");
            if (split != Split::train) {
                if (fs::exists(gt_path)) {
                    Tensor gt = resize_nearest(to_gray(read_png(gt_path)), s, s);
                    for (real& v : gt.data()) v = v > real(0.5) ? real(1) : real(0);
                    sample.gt_mask = std::move(gt);
                } else if (good) {
                    sample.gt_mask = Tensor({1, 1, s, s});
                } else {
                    throw IoError("missing ground-truth mask for " + rgb_path.string() + ": " + gt_path.string());
                }
            }
            samples.push_back(std::move(sample));
        }
    }
    if (samples.empty()) warn("no samples under " + split_dir.string());
    return samples;
}

} // namespace easynet
