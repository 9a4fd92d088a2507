#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "emseg/volume.hpp"

namespace emseg {

// EMVOL v1, little-endian:
//   [0,6)   magic "EMVOL1"
//   [6]     dtype (0 = u8, 1 = f32)
//   [7,19)  nx, ny, nz as u32
//   [19,31) sx, sy, sz as f32 (nm)
//   [31,..) payload, x fastest, z slowest
inline constexpr std::size_t kEmvolHeaderSize = 31;

std::vector<std::byte> encode_emvol(const Volume& v);
Volume decode_emvol(std::span<const std::byte> bytes);

Volume load_volume(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it into place.
void save_volume(const Volume& v, const std::filesystem::path& path);

}  // namespace emseg
