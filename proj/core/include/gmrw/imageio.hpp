#pragma once

#include <string>

#include "gmrw/types.hpp"

namespace gmrw {

// Decodes common still-image formats (png, jpeg, bmp, ppm, ...) to an RGB
// image with values in [0, 1].
Image read_image(const std::string& path);

// Encodes by file extension; values are clamped to [0, 1] before writing.
void write_image(const std::string& path, const Image& img);

}  // namespace gmrw
