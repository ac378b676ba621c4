#pragma once

// Grid histogram readers and writers: CSV rows of integers and PGM (P2/P5).

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "otclimb/measures.hpp"

namespace otclimb::io {

inline GridImage parse_csv_grid(const std::string& text, int resolution_tag = 0) {
  std::vector<std::int64_t> pixels;
  int width = -1;
  int height = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char ch : line) blank = blank && std::isspace(static_cast<unsigned char>(ch));
    if (blank) continue;
    int cols = 0;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) {
      std::size_t a = cell.find_first_not_of(" \t");
      std::size_t b = cell.find_last_not_of(" \t");
      if (a == std::string::npos) throw InputError("empty CSV cell on row " + std::to_string(height + 1));
      cell = cell.substr(a, b - a + 1);
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(cell, &used);
      } catch (const std::exception&) {
        throw InputError("non-integer CSV cell '" + cell + "'");
      }
      if (used != cell.size()) throw InputError("non-integer CSV cell '" + cell + "'");
      if (v < 0) throw InputError("negative intensity in CSV grid");
      pixels.push_back(v);
      ++cols;
    }
    if (width < 0) width = cols;
    if (cols != width) throw InputError("ragged CSV grid at row " + std::to_string(height + 1));
    ++height;
  }
  if (height == 0 || width <= 0) throw InputError("CSV grid is empty");
  return make_image(width, height, std::move(pixels), resolution_tag);
}

namespace detail {

inline void skip_pgm_space(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
}

inline long long read_pgm_int(const std::string& s, std::size_t& pos) {
  skip_pgm_space(s, pos);
  std::size_t start = pos;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  if (start == pos) throw InputError("malformed PGM header");
  return std::stoll(s.substr(start, pos - start));
}

}  // namespace detail

inline GridImage parse_pgm(const std::string& data, int resolution_tag = 0) {
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '2' && data[1] != '5')) {
    throw InputError("not a P2/P5 PGM file");
  }
  bool binary = data[1] == '5';
  std::size_t pos = 2;
  long long width = detail::read_pgm_int(data, pos);
  long long height = detail::read_pgm_int(data, pos);
  long long maxval = detail::read_pgm_int(data, pos);
  if (width <= 0 || height <= 0) throw InputError("PGM dimensions must be positive");
  if (maxval <= 0 || maxval > 65535) throw InputError("PGM maxval must be in 1..65535");
  std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::int64_t> pixels;
  pixels.reserve(count);
  if (binary) {
    ++pos;  // single whitespace after maxval
    std::size_t bytes = maxval < 256 ? 1 : 2;
    if (data.size() < pos + count * bytes) throw InputError("truncated PGM raster");
    for (std::size_t i = 0; i < count; ++i) {
      auto hi = static_cast<unsigned char>(data[pos + i * bytes]);
      std::int64_t v = hi;
      if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(data[pos + i * bytes + 1]);
      if (v > maxval) throw InputError("PGM sample exceeds maxval");
      pixels.push_back(v);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      long long v = detail::read_pgm_int(data, pos);
      if (v > maxval) throw InputError("PGM sample exceeds maxval");
      pixels.push_back(v);
    }
  }
  return make_image(static_cast<int>(width), static_cast<int>(height), std::move(pixels),
                    resolution_tag);
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Format detected from the PGM magic number; anything else is read as CSV.
inline GridImage read_grid(const std::string& path, int resolution_tag = 0) {
  std::string data = slurp(path);
  if (data.size() >= 2 && data[0] == 'P' && (data[1] == '2' || data[1] == '5')) {
    return parse_pgm(data, resolution_tag);
  }
  return parse_csv_grid(data, resolution_tag);
}

inline std::string to_csv(const GridImage& img) {
  std::ostringstream out;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (c) out << ',';
      out << img.at(r, c);
    }
    out << '\n';
  }
  return out.str();
}

// ASCII PGM, linearly rescaled so the largest sample maps to maxval.
inline std::string to_pgm(const GridImage& img, int maxval = 255) {
  std::int64_t peak = 0;
  for (auto v : img.pixels) peak = std::max(peak, v);
  std::ostringstream out;
  out << "P2\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (c) out << ' ';
      std::int64_t v = img.at(r, c);
      out << (peak == 0 ? 0 : static_cast<std::int64_t>((static_cast<__int128>(v) * maxval + peak / 2) / peak));
    }
    out << '\n';
  }
  return out.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
}

// Cost table from CSV rows "i,j,cost" over n points.  Each listed pair sets
// both (i, j) and (j, i); every off-diagonal pair must be listed.
inline std::vector<double> parse_cost_table(const std::string& text, std::size_t n) {
  std::vector<double> table(n * n, -1.0);
  for (std::size_t i = 0; i < n; ++i) table[i * n + i] = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw InputError("cost table line " + std::to_string(lineno) + " is not i,j,cost");
    }
    std::size_t i = 0, j = 0;
    double v = 0;
    try {
      i = std::stoul(a);
      j = std::stoul(b);
      v = std::stod(c);
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header row
      throw InputError("cost table line " + std::to_string(lineno) + " is not numeric");
    }
    if (!(v >= 0)) throw InputError("cost table entries must be >= 0");
    if (i >= n || j >= n) throw InputError("cost table index out of range on line " + std::to_string(lineno));
    if (i == j && v != 0) throw InputError("cost table diagonal must be zero");
    double& ij = table[i * n + j];
    double& ji = table[j * n + i];
    if ((ij >= 0 && ij != v) || (ji >= 0 && ji != v)) throw InputError("cost table lists a pair twice with different costs");
    ij = v;
    ji = v;
  }
  for (double v : table) {
    if (v < 0) throw InputError("cost table is missing a pair");
  }
  return table;
}

// Measure on a grid ground set back to an image of its integer units.
inline GridImage to_image(const DiscreteMeasure& m, int resolution_tag) {
  const auto& shape = m.ground().grid_shape();
  if (!shape) throw InputError("measure is not on a grid");
  GridImage img;
  img.width = shape->width;
  img.height = shape->height;
  img.resolution_tag = resolution_tag;
  img.pixels.assign(m.ground().size(), 0);
  for (const auto& a : m.atoms()) img.pixels[a.index] = a.units;
  return img;
}

}  // namespace otclimb::io
