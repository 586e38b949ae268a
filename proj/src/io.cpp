#include "wbb/io.hpp"

#include <zlib.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wbb/error.hpp"

namespace wbb::io {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                        : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const std::string& source, std::size_t line, std::size_t col) {
  return source + ":" + std::to_string(line) + ": column " + std::to_string(col);
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw ParseError("csv: no column named '" + name + "'");
}

CsvTable parse_csv_table(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  CsvTable t;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string& c = cells[j];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size()) {
        throw ParseError(where(source, lineno, j + 1) + ": not a number: '" + c + "'");
      }
      if (!std::isfinite(v)) throw ParseError(where(source, lineno, j + 1) + ": non-finite value '" + c + "'");
      row[j] = v;
    }
    rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(source + ": missing header");
  t.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      t.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return t;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return parse_csv_table(std::string(bytes.begin(), bytes.end()), path.string());
}

Dataset to_dataset(const CsvTable& table, const std::string& response_column) {
  const std::size_t r = table.column(response_column);
  Eigen::MatrixXd design(table.rows.rows(), table.rows.cols() - 1);
  std::vector<std::string> names;
  Eigen::Index at = 0;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == r) continue;
    design.col(at++) = table.rows.col(static_cast<Eigen::Index>(j));
    names.push_back(table.header[j]);
  }
  return make_dataset(std::move(design), table.rows.col(static_cast<Eigen::Index>(r)), std::move(names));
}

Dataset read_csv(const std::filesystem::path& path, const std::string& response_column) {
  return to_dataset(read_csv_table(path), response_column);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  auto f = open_out(path);
  for (std::size_t j = 0; j < header.size(); ++j) f << (j ? "," : "") << header[j];
  f << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) throw DomainError("write_csv: row width differs from header");
    for (std::size_t j = 0; j < row.size(); ++j) f << (j ? "," : "") << format_double(row[j]);
    f << '\n';
  }
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const std::string& response_name) {
  std::vector<std::string> header = data.feature_names;
  header.push_back(response_name);
  std::vector<std::vector<double>> rows(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < data.design.cols(); ++j) rows[i].push_back(data.design(ii, j));
    rows[i].push_back(data.response[ii]);
  }
  write_csv(path, header, rows);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (raw.size() < 2 || raw[0] != 0x1f || raw[1] != 0x8b) return raw;

  z_stream zs{};
  if (inflateInit2(&zs, 15 + 32) != Z_OK) throw FormatError("gzip: inflateInit failed");
  zs.next_in = raw.data();
  zs.avail_in = static_cast<uInt>(raw.size());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> chunk{};
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("gzip: corrupt or truncated stream in " + path.string());
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

IdxFile parse_idx(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw FormatError("idx: file shorter than its magic number");
  IdxFile f;
  f.magic = be32(bytes, 0);
  std::size_t ndim = 0;
  if (f.magic == 0x00000803) ndim = 3;
  else if (f.magic == 0x00000801) ndim = 1;
  else {
    std::ostringstream m;
    m << "idx: unsupported magic 0x" << std::hex << f.magic;
    throw FormatError(m.str());
  }
  if (bytes.size() < 4 + 4 * ndim) throw FormatError("idx: truncated header");
  std::size_t count = 1;
  for (std::size_t k = 0; k < ndim; ++k) {
    f.dims.push_back(be32(bytes, 4 + 4 * k));
    count *= f.dims.back();
  }
  const std::size_t offset = 4 + 4 * ndim;
  if (bytes.size() - offset < count) {
    throw FormatError("idx: payload has " + std::to_string(bytes.size() - offset) + " bytes, header promises " +
                      std::to_string(count));
  }
  if (bytes.size() - offset > count) throw FormatError("idx: trailing bytes after payload");
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return f;
}

IdxFile read_idx(const std::filesystem::path& path) { return parse_idx(read_bytes(path)); }

Eigen::MatrixXd decode_images(const IdxFile& f) {
  if (f.magic != 0x00000803 || f.dims.size() != 3) throw FormatError("idx: not an image file");
  const std::size_t pixels = std::size_t{f.dims[1]} * f.dims[2];
  Eigen::MatrixXd out(static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(f.dims[0]));
  for (std::size_t i = 0; i < f.dims[0]; ++i) {
    for (std::size_t p = 0; p < pixels; ++p) {
      out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = f.payload[i * pixels + p] / 255.0;
    }
  }
  return out;
}

std::vector<int> decode_labels(const IdxFile& f) {
  if (f.magic != 0x00000801 || f.dims.size() != 1) throw FormatError("idx: not a label file");
  std::vector<int> out(f.payload.size());
  for (std::size_t i = 0; i < f.payload.size(); ++i) {
    if (f.payload[i] > 9) {
      throw FormatError("idx: label " + std::to_string(f.payload[i]) + " at index " + std::to_string(i) +
                        " outside 0..9");
    }
    out[i] = f.payload[i];
  }
  return out;
}

LabeledSet read_mnist(const std::filesystem::path& images, const std::filesystem::path& labels) {
  Eigen::MatrixXd x = decode_images(read_idx(images));
  const auto y = decode_labels(read_idx(labels));
  if (static_cast<std::size_t>(x.cols()) != y.size()) throw FormatError("idx: image and label counts differ");
  return LabeledSet::from_labels(std::move(x), y);
}

nlohmann::json summary_to_json(const PosteriorSummary& summary) {
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& c : summary.coordinates) {
    coords.push_back({{"coordinate", c.name},
                      {"mean", c.mean},
                      {"sd", std::isfinite(c.sd) ? nlohmann::json(c.sd) : nlohmann::json(nullptr)},
                      {"q025", c.q025},
                      {"q50", c.q50},
                      {"q975", c.q975},
                      {"zero_fraction", c.zero_fraction}});
  }
  return {{"draw_count", summary.draw_count},
          {"quantile_method", PosteriorSummary::kQuantileMethod},
          {"coordinates", coords}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_sidecar(const std::filesystem::path& file, const nlohmann::json& meta) {
  nlohmann::json m = meta;
  m["file"] = file.filename().string();
  write_json(file.string() + ".meta.json", m);
}

void write_draws_csv(const std::filesystem::path& path, std::span<const DrawResult> draws,
                     const std::vector<std::string>& names) {
  std::vector<std::string> header{"draw_id"};
  header.insert(header.end(), names.begin(), names.end());
  std::vector<std::vector<double>> rows;
  for (const auto& d : draws) {
    if (d.failed) continue;
    std::vector<double> row{static_cast<double>(d.draw_id)};
    const auto& c = d.coordinates();
    row.insert(row.end(), c.begin(), c.end());
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h) {
  std::vector<std::vector<double>> rows;
  for (std::size_t b = 0; b < h.density.size(); ++b) rows.push_back({h.edges[b], h.edges[b + 1], h.density[b]});
  write_csv(path, {"lower", "upper", "density"}, rows);
}

}  // namespace wbb::io
