#pragma once

// 8-bit grayscale image files. Values map to [0, 1] by division by the
// maximum sample value; only square images are accepted.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ottv/grid.hpp"

namespace ottv {

/// Reads a PGM (P2 or P5) or grayscale PNG, chosen by content.
/// Throws IoError on unreadable, malformed, colour, 16-bit, or non-square input.
ScalarField load_image(const std::filesystem::path& path, double h = 1.0);

/// Writes clamp(field + offset, 0, 1) * 255 rounded half-up. The extension
/// (.pgm or .png) picks the format. The file is replaced atomically.
void save_image(const ScalarField& field, const std::filesystem::path& path, double offset = 0.0);

/// The 8-bit samples save_image would write, row-major.
std::vector<std::uint8_t> quantize(const ScalarField& field, double offset = 0.0);

}  // namespace ottv
