#pragma once

// Raster encoding: PNG (8-bit RGB, non-interlaced) when built with libpng,
// binary PPM (P6) always.

#include "sandbox3d/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sandbox3d {

bool png_supported();

std::vector<std::uint8_t> encode_png(const RgbImage& image);
RgbImage decode_png(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes);

// Format chosen by extension (.png / .ppm). Writing a .png without PNG
// support throws.
void write_image(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_image(const std::filesystem::path& path);

// Preferred raster extension for artifacts: ".png" or ".ppm".
std::string default_image_extension();

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace sandbox3d
