#pragma once

#include "easynet/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace easynet {

/// Procedural RGB-D benchmark written in the MVTec 3D-AD layout.
///
/// Each category is one object family on a slightly tilted background
/// plane: "sphere" (spherical cap), "box" (rounded slab), "ridge"
/// (corrugated slab). Test defects:
///   color     stain blended into the RGB, geometry untouched
///   dent      dent or bump in the point map, RGB untouched
///   combined  stain and dent on the same region
struct SyntheticSpec {
    std::vector<std::string> categories{"sphere", "box", "ridge"};
    int train_count = 40;
    int test_count = 20;
    int size = 64;
    std::uint64_t seed = 1;

    void validate() const;
    /// Test samples per defect kind; the remainder of test_count is "good".
    int per_defect() const { return test_count >= 5 ? test_count / 5 : 1; }
};

inline const std::vector<std::string>& synthetic_defect_kinds() {
    static const std::vector<std::string> kinds{"color", "dent", "combined"};
    return kinds;
}

struct SyntheticSample {
    Tensor rgb;       // as written to disk
    Tensor clean_rgb; // the same scene before any defect
    Tensor xyz;
    Tensor mask;
};

/// One sample of the dataset, exactly as generate_synthetic_dataset writes
/// it. Test indices run over the whole test split: good samples first,
/// then each defect kind in synthetic_defect_kinds() order.
SyntheticSample render_synthetic_sample(const SyntheticSpec& spec, std::size_t category_index, bool test, int index,
                                        const std::string& defect);

/// Writes the dataset under root. Output bytes depend only on the spec.
/// Throws IoError when root cannot be written.
void generate_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& root);

} // namespace easynet
