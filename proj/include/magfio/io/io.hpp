#pragma once

#include "magfio/quantize/quantize.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace magfio::io {

using json = nlohmann::json;

inline std::ofstream open_for_write(const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, mode);
  if (!f) throw Error("cannot open '" + p.string() + "' for writing");
  return f;
}

inline void write_json(const std::filesystem::path& p, const json& j) {
  auto f = open_for_write(p);
  f << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot open '" + p.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

inline json grid_json(const Grid& g) { return {{"dim", g.dim()}, {"N", g.N()}, {"L", g.L()}, {"h", g.h()}}; }

// Row-major little-endian complex64 pairs plus a JSON sidecar at path + ".json".
inline void dump_operator(const std::filesystem::path& p, const GridOperator& K) {
  static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
  auto f = open_for_write(p, std::ios::out | std::ios::binary);
  const long n = K.matrix.rows();
  std::vector<float> row(static_cast<std::size_t>(2 * K.matrix.cols()));
  for (long i = 0; i < n; ++i) {
    for (long j = 0; j < K.matrix.cols(); ++j) {
      row[static_cast<std::size_t>(2 * j)] = static_cast<float>(K.matrix(i, j).real());
      row[static_cast<std::size_t>(2 * j + 1)] = static_cast<float>(K.matrix(i, j).imag());
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  json meta = {{"format", "complex64-le-row-major"},
               {"rows", n},
               {"cols", K.matrix.cols()},
               {"kind", to_string(K.kind)},
               {"grid", grid_json(K.grid)},
               {"meta", K.meta}};
  write_json(p.string() + ".json", meta);
}

inline GridOperator load_operator(const std::filesystem::path& p) {
  json meta = read_json(p.string() + ".json");
  const auto& g = meta.at("grid");
  GridOperator K;
  K.grid = Grid(g.at("dim").get<int>(), g.at("N").get<int>(), g.at("L").get<double>());
  K.kind = kernel_kind_from_string(meta.at("kind").get<std::string>());
  K.meta = meta.at("meta").get<std::map<std::string, std::string>>();
  const long rows = meta.at("rows").get<long>(), cols = meta.at("cols").get<long>();
  std::ifstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + p.string() + "'");
  std::vector<float> buf(static_cast<std::size_t>(2 * rows * cols));
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!f) throw ConfigError("'" + p.string() + "' is shorter than its sidecar declares");
  K.matrix.resize(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) {
      std::size_t o = static_cast<std::size_t>(2 * (i * cols + j));
      K.matrix(i, j) = Complex(buf[o], buf[o + 1]);
    }
  return K;
}

// Fixed-precision number formatting so equal inputs give identical bytes.
inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// Columns: x_1..x_d, eta_1..eta_d, re, im.
inline void write_symbol_csv(const std::filesystem::path& p, const Grid& g, const SymbolSamples& s,
                             const std::vector<long>* columns = nullptr) {
  auto f = open_for_write(p);
  for (int a = 0; a < g.dim(); ++a) f << "x" << a + 1 << ',';
  for (int a = 0; a < g.dim(); ++a) f << "eta" << a + 1 << ',';
  f << "re,im\n";
  std::vector<long> cols;
  if (columns) {
    cols = *columns;
  } else {
    for (long k = 0; k < g.size(); ++k) cols.push_back(k);
  }
  for (long i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    for (long k : cols) {
      Vec e = g.freq(k);
      for (int a = 0; a < g.dim(); ++a) f << fmt(x(a)) << ',';
      for (int a = 0; a < g.dim(); ++a) f << fmt(e(a)) << ',';
      f << fmt(s(i, k).real()) << ',' << fmt(s(i, k).imag()) << '\n';
    }
  }
}

// Columns: x_1..x_d, re, im.
inline void write_wave_csv(const std::filesystem::path& p, const WaveFunction& u) {
  auto f = open_for_write(p);
  for (int a = 0; a < u.grid.dim(); ++a) f << "x" << a + 1 << ',';
  f << "re,im\n";
  for (long i = 0; i < u.grid.size(); ++i) {
    Vec x = u.grid.point(i);
    for (int a = 0; a < u.grid.dim(); ++a) f << fmt(x(a)) << ',';
    f << fmt(u.values(i).real()) << ',' << fmt(u.values(i).imag()) << '\n';
  }
}

// Generic table writer: header then rows of numbers.
inline void write_table_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& rows) {
  auto f = open_for_write(p);
  for (std::size_t c = 0; c < header.size(); ++c) f << (c ? "," : "") << header[c];
  f << '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) f << (c ? "," : "") << fmt(r[c]);
    f << '\n';
  }
}

// Table writer for rows that mix labels and numbers; cells are written as given.
inline void write_text_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  auto f = open_for_write(p);
  for (std::size_t c = 0; c < header.size(); ++c) f << (c ? "," : "") << header[c];
  f << '\n';
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) f << (c ? "," : "") << r[c];
    f << '\n';
  }
}

}  // namespace magfio::io
