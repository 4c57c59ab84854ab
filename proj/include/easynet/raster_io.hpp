#pragma once

#include "easynet/tensor.hpp"

#include <filesystem>

namespace easynet {

/// 8/16-bit PNG to a (1,C,H,W) tensor in [0,1]; C is 1 for gray, 3 otherwise
/// (alpha dropped). Throws IoError if unreadable, DecodeError if malformed.
Tensor read_png(const std::filesystem::path& path);

/// Writes a (1,1,H,W) or (1,3,H,W) tensor as 8-bit PNG, values clamped to
/// [0,1] and rounded. Output bytes depend only on the pixels.
void write_png(const std::filesystem::path& path, const Tensor& image);

/// Organized point map: 3-channel 32-bit float TIFF to (1,3,H,W) holding x, y, z.
Tensor read_xyz_tiff(const std::filesystem::path& path);
void write_xyz_tiff(const std::filesystem::path& path, const Tensor& xyz);

Tensor resize_bilinear(const Tensor& image, int height, int width);
Tensor resize_nearest(const Tensor& image, int height, int width);

} // namespace easynet
