#include "pcf/image_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace pcf {

namespace {

int read_pnm_int(std::istream& in) {
  // Skips whitespace and '#' comment lines.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error("truncated PNM header");
  int value = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw std::runtime_error("malformed PNM header");
  return value;
}

}  // namespace

void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<std::uint16_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << width << " " << height << "\n65535\n";
  for (std::uint16_t v : pixels) {
    char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::uint16_t> read_pgm16(const std::string& path, int& width, int& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    throw std::runtime_error("not a binary PGM: " + path);
  width = read_pnm_int(in);
  height = read_pnm_int(in);
  int maxval = read_pnm_int(in);
  if (maxval != 65535) throw std::runtime_error("expected 16-bit PGM: " + path);
  // read_pnm_int consumed the single whitespace after maxval
  std::vector<std::uint16_t> pixels(static_cast<std::size_t>(width) * height);
  for (auto& v : pixels) {
    int hi = in.get();
    int lo = in.get();
    if (lo == EOF) throw std::runtime_error("truncated PGM data: " + path);
    v = static_cast<std::uint16_t>((hi << 8) | lo);
  }
  return pixels;
}

void write_ppm8(const std::string& path, int width, int height,
                const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw std::invalid_argument("rgb buffer size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  if (!out) throw std::runtime_error("write failed: " + path);
}

void id_to_color(std::int32_t id, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b) {
  if (id <= 0) {
    r = g = b = 0;
    return;
  }
  const double golden = 0.61803398874989485;
  double hue = std::fmod(static_cast<double>(id) * golden, 1.0) * 6.0;
  int sector = static_cast<int>(hue);
  double frac = hue - sector;
  double p = 0.15, q = 1.0 - 0.85 * frac, t = 0.15 + 0.85 * frac;
  double rr, gg, bb;
  switch (sector % 6) {
    case 0: rr = 1.0; gg = t; bb = p; break;
    case 1: rr = q; gg = 1.0; bb = p; break;
    case 2: rr = p; gg = 1.0; bb = t; break;
    case 3: rr = p; gg = q; bb = 1.0; break;
    case 4: rr = t; gg = p; bb = 1.0; break;
    default: rr = 1.0; gg = p; bb = q; break;
  }
  r = static_cast<std::uint8_t>(rr * 255.0);
  g = static_cast<std::uint8_t>(gg * 255.0);
  b = static_cast<std::uint8_t>(bb * 255.0);
}

}  // namespace pcf
