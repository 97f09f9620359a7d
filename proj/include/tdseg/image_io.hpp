#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdseg/field.hpp"

namespace tdseg {

/// File could not be opened or written.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File opened fine but is not a format this library reads.
struct unsupported_format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File claims a supported format but its contents are malformed.
struct corrupt_file_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// 8-bit raster image as stored on disk, channels interleaved.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 = gray, 3 = RGB
    int max_value = 255;
    std::vector<std::uint8_t> samples;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// One phase index per pixel.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> labels;

    std::uint8_t at(int ix, int iy) const {
        return labels[static_cast<std::size_t>(iy) * width + ix];
    }
};

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Distinct colors for up to 256 phases; the first entries are a fixed
/// high-contrast set, later ones are spread around the hue wheel.
std::vector<Rgb> default_palette(int nphases);

/// Reads PGM (P5), PPM (P6) or PNG (8-bit gray / RGB). Intensities are
/// preserved bit-exactly. Throws io_error, unsupported_format_error or
/// corrupt_file_error.
RawImage load_image(const std::string& path);

/// Affine map of each channel from [0, max_value] to [0, 1] on the
/// 2*pi-wide grid for the image shape.
ImageField normalize(const RawImage& img);

/// Inverse of normalize for writing: clamps to [0, 1] and quantizes to 8 bits.
RawImage quantize(const ImageField& field);

/// Writes a RawImage; .png and .pgm/.ppm (binary) by extension.
void write_image(const RawImage& img, const std::string& path);

/// Renders labels through the palette and writes a PNG (deterministic bytes).
void write_label_map(const LabelMap& labels, std::span<const Rgb> palette,
                     const std::string& path);

/// Reads back a label-map PNG written with the same palette.
LabelMap load_label_map(const std::string& path, std::span<const Rgb> palette);

/// Writes the image with phase-boundary pixels (those with a 4-neighbor of a
/// different label) recolored; output is RGB PNG.
void write_contour_overlay(const RawImage& img, const LabelMap& labels,
                           const std::string& path, Rgb contour = {255, 0, 0});

/// Binary PGM mask of one phase, 255 inside.
void write_phase_mask(const LabelMap& labels, int phase, const std::string& path);

} // namespace tdseg
