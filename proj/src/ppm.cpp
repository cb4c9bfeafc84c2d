#include "detkit/ppm.hpp"

#include <cmath>
#include <fstream>

#include "detkit/error.hpp"

namespace detkit {

namespace {

// Skips whitespace and '#' comment lines between header tokens.
void skip_ppm_space(std::string_view s, std::size_t& pos) {
  while (pos < s.size()) {
    const char c = s[pos];
    if (c == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
}

long parse_ppm_int(std::string_view s, std::size_t& pos, const char* what) {
  skip_ppm_space(s, pos);
  const std::size_t start = pos;
  long value = 0;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
    value = value * 10 + (s[pos] - '0');
    if (value > 1000000000L) throw ParseError("ppm: oversized integer", start);
    ++pos;
  }
  if (pos == start) {
    throw ParseError(std::string("ppm: expected ") + what, pos);
  }
  return value;
}

}  // namespace

std::string encode_ppm(const Image& img) {
  require_valid(img, "encode_ppm");
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (double v : img.pixels) {
    const long b = std::lround(v * 255.0);
    out.push_back(static_cast<char>(std::clamp(b, 0L, 255L)));
  }
  return out;
}

Image decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw ParseError("ppm: missing P6 magic", 0);
  }
  std::size_t pos = 2;
  const long width = parse_ppm_int(bytes, pos, "width");
  const long height = parse_ppm_int(bytes, pos, "height");
  const long maxval = parse_ppm_int(bytes, pos, "maxval");
  if (width < 1 || height < 1) throw ParseError("ppm: bad dimensions", pos);
  if (maxval != 255) throw ParseError("ppm: maxval must be 255", pos);
  if (pos >= bytes.size()) throw ParseError("ppm: truncated header", pos);
  ++pos;  // single whitespace byte after maxval

  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - pos < need) {
    throw ParseError("ppm: truncated pixel data", bytes.size());
  }

  Image img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.pixels.resize(need);
  for (std::size_t i = 0; i < need; ++i) {
    img.pixels[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  const std::string data = encode_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInputError("cannot open for writing: " + path.string());
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open: " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return decode_ppm(data);
}

}  // namespace detkit
