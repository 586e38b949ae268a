#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include "json.hpp"
#include <string>
#include <vector>

#include "wbb/bootstrap.hpp"
#include "wbb/mlp.hpp"
#include "wbb/objectives.hpp"

namespace wbb::io {

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd rows;

  /// Column index by name; throws ParseError when absent.
  std::size_t column(const std::string& name) const;
};

/// Reads a headed, comma-separated numeric table. Ragged rows, empty or
/// non-numeric cells and non-finite values raise ParseError naming the
/// 1-based line and column.
CsvTable read_csv_table(const std::filesystem::path& path);
CsvTable parse_csv_table(const std::string& text, const std::string& source = "<string>");

/// Response column extracted; remaining columns become the design.
Dataset read_csv(const std::filesystem::path& path, const std::string& response_column);
Dataset to_dataset(const CsvTable& table, const std::string& response_column);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
/// Dataset with the response as the last column.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data, const std::string& response_name);

struct IdxFile {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;
};

/// Parses an IDX container; gzip input is detected by its magic bytes.
/// Throws FormatError on unknown magic, bad dimensions or truncated payload.
IdxFile read_idx(const std::filesystem::path& path);
IdxFile parse_idx(const std::vector<std::uint8_t>& bytes);

/// Images (magic 0x803, N x 28 x 28) as a 784 x N matrix scaled to [0, 1].
Eigen::MatrixXd decode_images(const IdxFile& f);
/// Labels (magic 0x801) in 0..9.
std::vector<int> decode_labels(const IdxFile& f);
LabeledSet read_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);

/// File bytes, transparently gunzipped.
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

nlohmann::json summary_to_json(const PosteriorSummary& summary);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
/// Writes `<file>.meta.json` next to `file`.
void write_sidecar(const std::filesystem::path& file, const nlohmann::json& meta);

/// One row per successful draw: draw_id followed by the coordinates.
void write_draws_csv(const std::filesystem::path& path, std::span<const DrawResult> draws,
                     const std::vector<std::string>& names);

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h);

}  // namespace wbb::io
