#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "detkit/geometry.hpp"

namespace detkit {

// Binary portable pixmap (P6, maxval 255). The loader maps byte b to
// b/255; the writer rounds to the nearest byte.
std::string encode_ppm(const Image& img);
Image decode_ppm(std::string_view bytes);

void write_ppm(const std::filesystem::path& path, const Image& img);
Image read_ppm(const std::filesystem::path& path);

}  // namespace detkit
