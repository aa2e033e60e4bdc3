#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "depseg/error.hpp"
#include "depseg/pipeline.hpp"

namespace depseg {

using KeyValues = std::map<std::string, std::string>;

/// key=value lines; '#' starts a comment; surrounding whitespace is ignored.
inline KeyValues parse_key_values(std::istream& in, const std::string& source = "<config>") {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, Errc::parse_error, source + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), Errc::parse_error, source + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), Errc::io, "cannot open config " + path.string());
  return parse_key_values(in, path.string());
}

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      out = static_cast<T>(std::stod(value, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == value.size() && !value.empty(), Errc::parse_error, "bad number for " + key + ": '" + value + "'");
  } else {
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    require(ec == std::errc() && ptr == value.data() + value.size(), Errc::parse_error,
            "bad integer for " + key + ": '" + value + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw Error(Errc::parse_error, "bad boolean for " + key + ": '" + value + "'");
}

}  // namespace detail

/// Applies recognised keys; unknown keys are an error so typos surface.
inline void apply_config(const KeyValues& kv, PipelineConfig& cfg) {
  using detail::parse_number;
  auto& p = cfg.proposal;
  auto& m = cfg.masks;
  for (const auto& [key, value] : kv) {
    if (key == "kmeans_k") p.kmeans_k = parse_number<int>(key, value);
    else if (key == "canny_low") p.canny_low = parse_number<float>(key, value);
    else if (key == "canny_high") p.canny_high = parse_number<float>(key, value);
    else if (key == "open_radius") p.open_radius = parse_number<int>(key, value);
    else if (key == "close_radius") p.close_radius = parse_number<int>(key, value);
    else if (key == "min_region_area") p.min_region_area = parse_number<int>(key, value);
    else if (key == "min_distance") p.min_distance = parse_number<int>(key, value);
    else if (key == "border_margin") p.border_margin = parse_number<int>(key, value);
    else if (key == "max_points_per_region") p.max_points_per_region = parse_number<int>(key, value);
    else if (key == "max_total_points") p.max_total_points = parse_number<int>(key, value);
    else if (key == "near_is_high") p.near_is_high = detail::parse_bool(key, value);
    else if (key == "seed") cfg.seed = p.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "score_threshold") m.score_threshold = parse_number<float>(key, value);
    else if (key == "mask_open_radius") m.open_radius = parse_number<int>(key, value);
    else if (key == "min_mask_area") m.min_mask_area = parse_number<int>(key, value);
    else if (key == "connectivity") m.connectivity = parse_number<int>(key, value);
    else if (key == "k" || key == "top_k") cfg.top_k = parse_number<int>(key, value);
    else if (key == "frac" || key == "fraction") cfg.fraction = parse_number<double>(key, value);
    else throw Error(Errc::parse_error, "unknown config key '" + key + "'");
  }
  p.validate();
  m.validate();
  require(cfg.top_k >= 1, Errc::invalid_argument, "k must be >= 1");
  require(cfg.fraction > 0.0 && cfg.fraction <= 1.0, Errc::invalid_argument, "frac must lie in (0, 1]");
}

}  // namespace depseg
