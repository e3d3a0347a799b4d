#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pcf {

// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
void write_pgm16(const std::string& path, int width, int height,
                 const std::vector<std::uint16_t>& pixels);
std::vector<std::uint16_t> read_pgm16(const std::string& path, int& width, int& height);

// Binary 8-bit PPM (P6).
void write_ppm8(const std::string& path, int width, int height,
                const std::vector<std::uint8_t>& rgb);

// Deterministic instance id -> color palette (golden-ratio hue stepping);
// id 0 maps to black.
void id_to_color(std::int32_t id, std::uint8_t& r, std::uint8_t& g, std::uint8_t& b);

}  // namespace pcf
