#pragma once

#include <string>

#include "das/image.hpp"

namespace das {

// Decodes an 8-bit PNG to [0,1] via v/255. Grayscale and palette images are
// expanded to RGB; an alpha channel is dropped with a warning on stderr.
// Throws Error on malformed files or bit depths other than 8.
Image read_png(const std::string& path);

// read_png plus the task-input policy: non-square images are center-cropped
// to their short side, with a notice on stderr.
Image read_png_square(const std::string& path);

// Encodes to 8-bit RGB (or grayscale for single-channel images) with
// round-half-up: byte = floor(v*255 + 0.5), clamped to [0,255].
void write_png(const std::string& path, const Image& image);

}  // namespace das
