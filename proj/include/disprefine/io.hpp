#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disprefine/grid.hpp"
#include "disprefine/mask.hpp"

namespace disprefine {

// Rectified-stereo parameters for disparity <-> metric depth conversion.
struct CalibrationFile {
    double focal_px = 0.0;
    double baseline_mm = 0.0;
    double min_valid_disparity_px = 0.1;
};

// Throws DomainError unless focal/baseline are finite and > 0 and min disparity is finite and >= 0.
void validate(const CalibrationFile& calib);

// PFM ("Pf", single channel). Rows are stored bottom-up; a negative scale means
// little-endian. Non-finite stored values decode as invalid pixels, and invalid
// pixels encode as NaN.
ScalarMap parse_pfm(std::span<const std::byte> bytes, std::string_view source = "<memory>");
std::vector<std::byte> encode_pfm(const ScalarMap& map);
ScalarMap read_pfm(const std::filesystem::path& path);
void write_pfm(const ScalarMap& map, const std::filesystem::path& path);

// Middlebury .flo: float magic 202021.25, int32 width, int32 height, then
// row-major interleaved (dx, dy) float32, all little-endian. Components with
// magnitude above 1e9 mark the pixel invalid.
inline constexpr float kFloMagic = 202021.25f;
inline constexpr float kFloUnknown = 1e10f;

FlowMap parse_flo(std::span<const std::byte> bytes, std::string_view source = "<memory>");
std::vector<std::byte> encode_flo(const FlowMap& flow);
FlowMap read_flo(const std::filesystem::path& path);
void write_flo(const FlowMap& flow, const std::filesystem::path& path);

// 8-bit grayscale PNG. Pixel v decodes to v / 255; encoding uses floor(255 m + 0.5).
// Invalid mask pixels are written as 0.
OcclusionMask parse_mask_png(std::span<const std::byte> bytes, std::string_view source = "<memory>");
std::vector<std::byte> encode_mask_png(const OcclusionMask& mask);
OcclusionMask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const OcclusionMask& mask, const std::filesystem::path& path);

// Raw 8-bit grayscale writer, used for visualizations.
std::vector<std::byte> encode_gray_png(std::span<const std::uint8_t> pixels, int width, int height);
void write_gray_png(std::span<const std::uint8_t> pixels, int width, int height,
                    const std::filesystem::path& path);

// `key = value` text. Blank lines and lines starting with '#' are ignored.
// Keys: focal_px, baseline_mm (required), min_valid_disparity_px (default 0.1).
CalibrationFile parse_calibration(std::string_view text, std::string_view source = "<memory>");
std::string format_calibration(const CalibrationFile& calib);
CalibrationFile read_calibration(const std::filesystem::path& path);
void write_calibration(const CalibrationFile& calib, const std::filesystem::path& path);

// Whole-file helpers. write_file_atomic writes to a sibling temp file and renames it into place.
std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace disprefine
