#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "eiklab/grid.hpp"

namespace eiklab {

using OrderedJson = nlohmann::ordered_json;

namespace io {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open " + path.string() + " for writing");
  out.write(text.data(), std::streamsize(text.size()));
  if (!out) throw std::runtime_error("io: short write to " + path.string());
}

inline void write_json(const std::filesystem::path& path, const OrderedJson& j) {
  write_text(path, j.dump(2) + "\n");
}

inline OrderedJson read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path.string());
  return OrderedJson::parse(in);
}

// Shortest-unambiguous decimal for doubles in CSV cells; %.17g round-trips.
inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_csv(const std::filesystem::path& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string text = header + "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) text += ',';
      text += num(row[c]);
    }
    text += '\n';
  }
  write_text(path, text);
}

/// Raw little-endian complex128 dump in node-index order (i fastest, then j,
/// then k) plus a JSON descriptor carrying the grid geometry.
inline void dump_complex_field(const std::filesystem::path& dir, const std::string& stem,
                               const ComplexField& u) {
  static_assert(sizeof(Complex) == 16, "complex128 layout assumed");
  const std::filesystem::path bin = dir / (stem + ".bin");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open " + bin.string() + " for writing");
  out.write(reinterpret_cast<const char*>(u.v.data()),
            std::streamsize(u.v.size() * sizeof(Complex)));
  if (!out) throw std::runtime_error("io: short write to " + bin.string());
  OrderedJson desc;
  desc["schema_version"] = 1;
  desc["file"] = stem + ".bin";
  desc["dtype"] = "complex128";
  desc["layout"] = "index i fastest, then j, then k; node coordinate (index - (n-1)/2) * spacing";
  desc["n"] = u.grid.n;
  desc["spacing"] = u.grid.h;
  desc["half_extent"] = u.grid.half_extent();
  desc["count"] = u.v.size();
  write_json(dir / (stem + ".json"), desc);
}

inline ComplexField load_complex_field(const std::filesystem::path& descriptor) {
  const OrderedJson desc = read_json(descriptor);
  if (desc.at("dtype").get<std::string>() != "complex128")
    throw std::runtime_error("io: unsupported dtype in " + descriptor.string());
  const int n = desc.at("n").get<int>();
  const double h = desc.at("spacing").get<double>();
  ComplexField u(Grid3(n, h));
  const std::filesystem::path bin =
      descriptor.parent_path() / desc.at("file").get<std::string>();
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + bin.string());
  in.read(reinterpret_cast<char*>(u.v.data()), std::streamsize(u.v.size() * sizeof(Complex)));
  if (std::size_t(in.gcount()) != u.v.size() * sizeof(Complex))
    throw std::runtime_error("io: truncated field data in " + bin.string());
  return u;
}

}  // namespace io
}  // namespace eiklab
