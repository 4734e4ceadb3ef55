#pragma once

#include <filesystem>

#include "core/image.hpp"

namespace rehand {

// PNG codec (8-bit). Reads any PNG color type and converts to RGB; palette,
// gray and 16-bit inputs are expanded, alpha is dropped.
Image read_png(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);
void write_png_rgba(const ImageRgba& img, const std::filesystem::path& path);

}  // namespace rehand
