// io.hpp - raster files, color model lifts and frame export.
//
// Color conversions (channels in [0, 1]):
//   hsv: value = max(r,g,b), saturation = (max - min) / max (0 for black),
//        hue = 60 deg sector formula in radians, wrapped to (-pi, pi].
//        The pixel is stored as (hue, saturation, value).
//   cb:  brightness = |rgb|_2, chromaticity = rgb / |rgb|_2; black maps to
//        chromaticity (1,1,1)/sqrt(3). Stored as (c1, c2, c3, brightness).
//
// MVR1 files: "MVR1", u16 version (1), u16 manifold code, u32 n1, u32 n2,
// u32 dof, then n1*n2*dof little-endian doubles, row-major, x2 fastest.
// Manifold codes: 0 euclidean, 1 circle, 2 sphere, 3 spd, 4 hsv, 5 cb.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvmorph/image.hpp"
#include "mvmorph/morph.hpp"

namespace mvmorph {

enum class ColorModel { gray, rgb, hsv, cb, spd, mvr };
enum class RenderMode { png, mvr, glyph };

ColorModel parse_color_model(const std::string &s);
std::string to_string(ColorModel m);
RenderMode parse_render_mode(const std::string &s);
std::string to_string(RenderMode m);

// 8-bit style raster with channel values in [0, 1]; 1 (gray) or 3 (rgb) channels.
struct Raster {
    int n1 = 0, n2 = 0, channels = 0;
    std::vector<double> data; // row-major, channel fastest

    double &at(int i, int j, int c) { return data[(static_cast<std::size_t>(i) * n2 + j) * channels + c]; }
    double at(int i, int j, int c) const { return data[(static_cast<std::size_t>(i) * n2 + j) * channels + c]; }
};

// PNG (libpng) or binary/ascii PPM/PGM, detected from the file contents.
Raster read_raster(const std::filesystem::path &path);
// 8-bit PNG; values are clamped to [0, 1] and rounded.
void write_png(const std::filesystem::path &path, const Raster &r);

Vec rgb_to_hsv(const Vec &rgb);
Vec hsv_to_rgb(const Vec &hsv);
Vec rgb_to_cb(const Vec &rgb);
Vec cb_to_rgb(const Vec &cb);

// Manifold for a color model (gray, rgb, hsv, cb); spd and mvr take it from the file.
Manifold color_manifold(ColorModel m);
MvImage lift(const Raster &r, ColorModel m);
Raster unlift(const MvImage &img, ColorModel m);

std::uint16_t manifold_code(const Manifold &m);
Manifold manifold_from_code(std::uint16_t code, std::uint32_t dof);
void write_mvr(const std::filesystem::path &path, const MvImage &img);
MvImage read_mvr(const std::filesystem::path &path);

// Reads and lifts one image and validates every pixel. Throws ParseError
// naming the file and, for bad values, the pixel index.
MvImage ingest(const std::filesystem::path &path, ColorModel m);

// SPD(2) or SPD(3) field drawn as one ellipse per pixel in a tile x tile
// block. SPD(3) tensors are projected onto the image plane. The color encodes
// the orientation of the principal eigenvector.
Raster render_glyphs(const MvImage &img, int tile = 15);

// Writes frame_000.<ext> ... into dir and returns the paths. png mode needs a
// color model (gray, rgb, hsv, cb) or an SPD image, which is drawn as glyphs.
std::vector<std::filesystem::path> export_frames(const std::vector<MvImage> &frames,
                                                 const std::filesystem::path &dir, RenderMode mode,
                                                 ColorModel model);

// CSV with header level,sweep,phase,J_total,J_reg,J_data,min_det,floored.
void write_energy_csv(const std::filesystem::path &path, const std::vector<EnergyRecord> &ledger);

} // namespace mvmorph
