#pragma once

#include <string>

#include "lckasr/image.hpp"

namespace lckasr {

// 8-bit PNG I/O. Grayscale, palette and alpha inputs are expanded to RGB on
// read; writes are always 8-bit RGB and atomic (temp file + rename).
ImageU8 read_png(const std::string& path);
void write_png(const ImageU8& img, const std::string& path);

}  // namespace lckasr
