#pragma once

#include "irissr/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace irissr {

/// Reads an 8-bit PNG, binary PGM (P5) or JPEG. Colour inputs are reduced to
/// luma with the ITU-R BT.601 weights (0.299 R + 0.587 G + 0.114 B).
Image read_image(const std::filesystem::path& path);

/// Writes 8-bit grayscale PNG or PGM, chosen by extension.
void write_image(const std::filesystem::path& path, const Image& img);

/// round(v * 255) with clamping.
std::vector<std::uint8_t> to_gray8(const Image& img);
Image from_gray8(int width, int height, const std::vector<std::uint8_t>& bytes);

} // namespace irissr
