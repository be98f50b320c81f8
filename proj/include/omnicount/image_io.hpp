#pragma once

#include "omnicount/image.hpp"

#include <filesystem>

namespace omnicount {

/// Reads PNG or JPEG into float planes holding 0..255 values. Colour images
/// keep the decoder's channel order. Throws std::runtime_error when unreadable.
Image<float> load_image(const std::filesystem::path& path);

/// Writes PNG, rounding and saturating to 8 bits.
void save_png(const std::filesystem::path& path, const Image<float>& image);

bool is_image_file(const std::filesystem::path& path);

}  // namespace omnicount
