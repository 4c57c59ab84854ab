#pragma once

#include "easynet/ransac.hpp"
#include "easynet/sample.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace easynet {

enum class Split { train, validation, test };

const char* to_string(Split split);

struct DataConfig {
    std::filesystem::path root;
    int input_size = 256;
    RansacConfig ransac;
    /// Lower end of the normalized foreground depth range; 0 stays reserved for background.
    double foreground_floor = 0.1;

    void validate() const;
};

/// Reads <root>/<category>/<split>/<defect>/{rgb,xyz,gt}/NNN.{png,tiff,png}.
/// RGB is resized bilinearly, point maps and masks by nearest neighbour,
/// then the background plane is removed from the point map. Samples come
/// back sorted by (defect, id). A missing category or split directory
/// yields an empty list and a message in *warnings.
///
/// Throws IoError naming a missing xyz or gt partner file, DecodeError on
/// malformed rasters, and DataContractError for a non-"good" defect
/// directory under the train split.
std::vector<RgbdSample> load_mvtec3d(const DataConfig& cfg, const std::string& category, Split split,
                                     std::vector<std::string>* warnings = nullptr);

/// Category directories directly under root, sorted.
std::vector<std::string> list_categories(const std::filesystem::path& root);

} // namespace easynet
