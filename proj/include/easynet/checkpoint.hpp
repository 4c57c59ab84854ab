#pragma once

#include "easynet/model.hpp"

#include <cstdint>
#include <filesystem>

namespace easynet {

/// Checkpoint archive, little-endian:
///
///   "ENETCKPT"                      8-byte magic
///   u32 version                     currently 1
///   u32 length, bytes               header text, "key=value" lines: the
///                                   ModelConfig fields (mrn.*, msn.*,
///                                   model.se_reduction), step, scalar_bytes
///   u32 count                       parameter tensors, each:
///     u16 length, bytes             hierarchical name ("mrn.rgb.enc0.weight")
///     i32 n, c, h, w                shape
///     u8 scalar_bytes               4 (float32) or 8 (float64)
///     n*c*h*w scalars
///   u64 checksum                    FNV-1a over every preceding byte
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const EasyNet& model, std::int64_t step = 0);

/// Rebuilds the model from the stored config and loads every parameter.
/// Throws CheckpointError on a bad magic, version, checksum, or on missing,
/// extra or mis-shaped parameters; IoError when the file cannot be read.
EasyNet load_checkpoint(const std::filesystem::path& path, std::int64_t* step = nullptr);

} // namespace easynet
