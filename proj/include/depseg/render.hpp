#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "depseg/error.hpp"
#include "depseg/image.hpp"
#include "depseg/tensor_io.hpp"

namespace depseg {

struct PaletteEntry {
  Rgb color;
  std::string name;
};

using Palette = std::map<std::uint16_t, PaletteEntry>;

/// CholecSeg8k's 13 classes.
inline Palette default_palette() {
  return {
      {0, {{0, 0, 0}, "Background"}},
      {1, {{210, 140, 140}, "Abdominal Wall"}},
      {2, {{255, 114, 114}, "Liver"}},
      {3, {{231, 70, 156}, "Gastrointestinal Tract"}},
      {4, {{186, 183, 75}, "Fat"}},
      {5, {{170, 255, 0}, "Grasper"}},
      {6, {{255, 85, 0}, "Connective Tissue"}},
      {7, {{255, 0, 0}, "Blood"}},
      {8, {{255, 255, 0}, "Cystic Duct"}},
      {9, {{169, 255, 184}, "L-hook Electrocautery"}},
      {10, {{255, 160, 165}, "Gallbladder"}},
      {11, {{0, 50, 128}, "Hepatic Vein"}},
      {12, {{111, 74, 0}, "Liver Ligament"}},
  };
}

/// Lines "<id> <r> <g> <b> <name...>"; '#' comments allowed.
inline Palette parse_palette(std::istream& in) {
  Palette p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    long id = 0, r = 0, g = 0, b = 0;
    if (!(ss >> id)) continue;
    require(static_cast<bool>(ss >> r >> g >> b) && id >= 0 && id <= 0xffff && r >= 0 && r <= 255 && g >= 0 &&
                g <= 255 && b >= 0 && b <= 255,
            Errc::parse_error, "palette line " + std::to_string(lineno) + ": expected '<id> <r> <g> <b> <name>'");
    std::string name;
    std::getline(ss >> std::ws, name);
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    p[static_cast<std::uint16_t>(id)] = {Rgb{std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)}, name};
  }
  return p;
}

inline Palette read_palette(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot open palette " + path.string());
  return parse_palette(in);
}

inline std::map<std::uint16_t, std::string> palette_names(const Palette& p) {
  std::map<std::uint16_t, std::string> names;
  for (const auto& [id, e] : p) names[id] = e.name;
  return names;
}

/// Alpha blend of class colours over the frame; background (0) is left
/// untouched. Channel = round((1 - alpha) * pixel + alpha * colour).
inline RgbImage render_overlay(const RgbImage& rgb, const LabelMap& labels, const Palette& palette,
                               double alpha = 0.5) {
  require(rgb.same_shape(labels), Errc::shape_mismatch, "overlay label map differs from frame");
  require(alpha >= 0.0 && alpha <= 1.0, Errc::invalid_argument, "alpha must lie in [0, 1]");
  RgbImage out = rgb;
  auto blend = [&](std::uint8_t a, std::uint8_t b) {
    return static_cast<std::uint8_t>(std::lround((1.0 - alpha) * a + alpha * b));
  };
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (labels[i] == 0) continue;
    const auto it = palette.find(labels[i]);
    if (it == palette.end())
      throw Error(Errc::missing_palette_entry, "no palette colour for class " + std::to_string(labels[i]));
    const Rgb c = it->second.color;
    out[i] = Rgb{blend(out[i].r, c.r), blend(out[i].g, c.g), blend(out[i].b, c.b)};
  }
  return out;
}

/// Binary PPM (P6).
inline std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
  const std::string header = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + 3 * img.size());
  for (const Rgb& p : img.pixels()) {
    out.push_back(p.r);
    out.push_back(p.g);
    out.push_back(p.b);
  }
  return out;
}

inline void write_ppm(const RgbImage& img, const std::filesystem::path& path) { write_bytes(path, encode_ppm(img)); }

}  // namespace depseg
