#include "tdseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace tdseg {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw io_error("cannot open '" + path + "'");
    return f;
}

// ---------------------------------------------------------------- PNM ----

int pnm_read_token(std::FILE* f, const std::string& path) {
    // Skips whitespace and '#' comments, then reads one decimal value.
    int c = std::fgetc(f);
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = std::fgetc(f);
        } else if (!std::isspace(c)) {
            break;
        }
        c = std::fgetc(f);
    }
    if (c == EOF || !std::isdigit(c))
        throw corrupt_file_error("malformed PNM header in '" + path + "'");
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 20) throw corrupt_file_error("PNM header value out of range in '" + path + "'");
        c = std::fgetc(f);
    }
    return static_cast<int>(value);
}

RawImage load_pnm(std::FILE* f, int channels, const std::string& path) {
    RawImage img;
    img.channels = channels;
    img.width = pnm_read_token(f, path);
    img.height = pnm_read_token(f, path);
    img.max_value = pnm_read_token(f, path);
    if (img.width < 1 || img.height < 1)
        throw corrupt_file_error("bad PNM dimensions in '" + path + "'");
    if (img.max_value < 1 || img.max_value > 255)
        throw unsupported_format_error("only 8-bit PNM supported: '" + path + "'");
    const std::size_t count = img.pixel_count() * channels;
    img.samples.resize(count);
    if (std::fread(img.samples.data(), 1, count, f) != count)
        throw corrupt_file_error("truncated PNM data in '" + path + "'");
    return img;
}

void write_pnm(const RawImage& img, const std::string& path) {
    FilePtr f = open_file(path, "wb");
    std::string header = (img.channels == 1 ? "P5" : "P6");
    header += "\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n" +
              std::to_string(img.max_value) + "\n";
    if (std::fwrite(header.data(), 1, header.size(), f.get()) != header.size() ||
        std::fwrite(img.samples.data(), 1, img.samples.size(), f.get()) != img.samples.size())
        throw io_error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------- PNG ----

RawImage load_png(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("libpng initialization failed");
    }

    RawImage img;
    volatile bool corrupt = false, unsupported = false;
    std::string detail;
    // libpng reports errors via longjmp; exceptions are raised only after
    // the structs are destroyed.
    if (setjmp(png_jmpbuf(png))) {
        corrupt = true;
    } else {
        png_init_io(png, f);
        png_read_info(png, info);
        const int bit_depth = png_get_bit_depth(png, info);
        const int color_type = png_get_color_type(png, info);
        if (bit_depth != 8 ||
            (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
            unsupported = true;
            detail = "PNG variant not supported (need 8-bit gray or RGB)";
        } else {
            img.width = static_cast<int>(png_get_image_width(png, info));
            img.height = static_cast<int>(png_get_image_height(png, info));
            img.channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
            img.max_value = 255;
            img.samples.resize(img.pixel_count() * img.channels);
            std::vector<png_bytep> rows(img.height);
            const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
            for (int y = 0; y < img.height; ++y) rows[y] = img.samples.data() + y * stride;
            png_read_image(png, rows.data());
            png_read_end(png, nullptr);
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (unsupported) throw unsupported_format_error(detail + ": '" + path + "'");
    if (corrupt) throw corrupt_file_error("corrupt PNG data in '" + path + "'");
    return img;
}

void write_png(const RawImage& img, const std::string& path) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw io_error("libpng initialization failed");
    }
    volatile bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, f.get());
        const int color_type = (img.channels == 1) ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
        png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
        for (int y = 0; y < img.height; ++y)
            png_write_row(png, const_cast<png_bytep>(img.samples.data() + y * stride));
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    if (failed) throw io_error("PNG write failed for '" + path + "'");
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void validate_raw(const RawImage& img, const char* where) {
    if (img.width < 1 || img.height < 1)
        throw std::invalid_argument(std::string(where) + ": empty image");
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument(std::string(where) + ": channels must be 1 or 3");
    if (img.samples.size() != img.pixel_count() * img.channels)
        throw std::invalid_argument(std::string(where) + ": sample count mismatch");
}

Rgb hsv_to_rgb(double h, double s, double v) {
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1)      { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else             { r = c; b = x; }
    const double m = v - c;
    auto q = [&](double t) { return static_cast<std::uint8_t>(std::lround((t + m) * 255.0)); };
    return {q(r), q(g), q(b)};
}

} // namespace

std::vector<Rgb> default_palette(int nphases) {
    static const Rgb base[] = {
        {0, 0, 0},       {255, 255, 255}, {230, 25, 75},  {60, 180, 75},
        {0, 130, 200},   {255, 225, 25},  {145, 30, 180}, {70, 240, 240},
        {245, 130, 48},  {240, 50, 230},
    };
    std::vector<Rgb> palette;
    palette.reserve(nphases);
    for (int i = 0; i < nphases; ++i) {
        if (i < static_cast<int>(std::size(base)))
            palette.push_back(base[i]);
        else
            palette.push_back(hsv_to_rgb(std::fmod(i * 47.0, 360.0), 0.8, 0.9));
    }
    return palette;
}

RawImage load_image(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char magic[8] = {0};
    const std::size_t got = std::fread(magic, 1, sizeof magic, f.get());

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) {
        std::rewind(f.get());
        return load_png(f.get(), path);
    }
    if (got >= 2 && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
        std::fseek(f.get(), 2, SEEK_SET);
        return load_pnm(f.get(), magic[1] == '5' ? 1 : 3, path);
    }
    throw unsupported_format_error("unrecognized image format: '" + path + "'");
}

ImageField normalize(const RawImage& img) {
    validate_raw(img, "normalize");
    const Grid grid = Grid::for_image(img.width, img.height);
    std::vector<double> values(img.samples.size());
    const double scale = 1.0 / img.max_value;
    for (std::size_t i = 0; i < img.samples.size(); ++i) values[i] = img.samples[i] * scale;
    return ImageField(grid, img.channels, std::move(values));
}

RawImage quantize(const ImageField& field) {
    RawImage img;
    img.width = field.grid().nx;
    img.height = field.grid().ny;
    img.channels = field.channels();
    img.max_value = 255;
    img.samples.resize(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double v = std::clamp(field.values()[i], 0.0, 1.0);
        img.samples[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return img;
}

void write_image(const RawImage& img, const std::string& path) {
    validate_raw(img, "write_image");
    if (has_suffix(path, ".png")) {
        write_png(img, path);
    } else if (has_suffix(path, ".pgm") || has_suffix(path, ".ppm")) {
        if ((img.channels == 1) != has_suffix(path, ".pgm"))
            throw std::invalid_argument("write_image: channel count does not match extension");
        write_pnm(img, path);
    } else {
        throw unsupported_format_error("unsupported output extension: '" + path + "'");
    }
}

void write_label_map(const LabelMap& labels, std::span<const Rgb> palette,
                     const std::string& path) {
    RawImage img;
    img.width = labels.width;
    img.height = labels.height;
    img.channels = 3;
    img.samples.resize(img.pixel_count() * 3);
    for (std::size_t p = 0; p < labels.labels.size(); ++p) {
        const std::uint8_t l = labels.labels[p];
        if (l >= palette.size())
            throw std::invalid_argument("write_label_map: label exceeds palette size");
        img.samples[3 * p] = palette[l].r;
        img.samples[3 * p + 1] = palette[l].g;
        img.samples[3 * p + 2] = palette[l].b;
    }
    write_png(img, path);
}

LabelMap load_label_map(const std::string& path, std::span<const Rgb> palette) {
    const RawImage img = load_image(path);
    LabelMap map;
    map.width = img.width;
    map.height = img.height;
    map.labels.resize(img.pixel_count());
    for (std::size_t p = 0; p < map.labels.size(); ++p) {
        Rgb c;
        if (img.channels == 1) {
            c = {img.samples[p], img.samples[p], img.samples[p]};
        } else {
            c = {img.samples[3 * p], img.samples[3 * p + 1], img.samples[3 * p + 2]};
        }
        const auto it = std::find(palette.begin(), palette.end(), c);
        if (it == palette.end())
            throw corrupt_file_error("pixel color not in palette: '" + path + "'");
        map.labels[p] = static_cast<std::uint8_t>(it - palette.begin());
    }
    return map;
}

void write_contour_overlay(const RawImage& img, const LabelMap& labels,
                           const std::string& path, Rgb contour) {
    validate_raw(img, "write_contour_overlay");
    if (img.width != labels.width || img.height != labels.height)
        throw std::invalid_argument("write_contour_overlay: image/label dimension mismatch");

    RawImage out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 3;
    out.samples.resize(out.pixel_count() * 3);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        if (img.channels == 1) {
            out.samples[3 * p] = out.samples[3 * p + 1] = out.samples[3 * p + 2] = img.samples[p];
        } else {
            std::copy_n(img.samples.data() + 3 * p, 3, out.samples.data() + 3 * p);
        }
    }
    // A pixel is on the boundary when an in-bounds 4-neighbor carries a
    // different label. No wraparound: this is a rendering choice only.
    for (int y = 0; y < labels.height; ++y) {
        for (int x = 0; x < labels.width; ++x) {
            const std::uint8_t l = labels.at(x, y);
            const bool boundary = (x > 0 && labels.at(x - 1, y) != l) ||
                                  (x + 1 < labels.width && labels.at(x + 1, y) != l) ||
                                  (y > 0 && labels.at(x, y - 1) != l) ||
                                  (y + 1 < labels.height && labels.at(x, y + 1) != l);
            if (boundary) {
                const std::size_t p = static_cast<std::size_t>(y) * labels.width + x;
                out.samples[3 * p] = contour.r;
                out.samples[3 * p + 1] = contour.g;
                out.samples[3 * p + 2] = contour.b;
            }
        }
    }
    write_png(out, path);
}

void write_phase_mask(const LabelMap& labels, int phase, const std::string& path) {
    RawImage img;
    img.width = labels.width;
    img.height = labels.height;
    img.channels = 1;
    img.samples.resize(img.pixel_count());
    for (std::size_t p = 0; p < img.samples.size(); ++p)
        img.samples[p] = (labels.labels[p] == phase) ? 255 : 0;
    write_pnm(img, path);
}

} // namespace tdseg
