// Persistence: CSV/JSON tables, manifests, SVG charts, output-directory lock.

#pragma once

#include "chiralsim/result.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace chiralsim {

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

/// Fixed 9-significant-digit formatting used by every table writer.
std::string format_number(double value);

std::string to_csv(const Table& table);
Table parse_csv(const std::string& text);
Table read_csv(const std::filesystem::path& path);
/// Table plus parameters, metrics, labels and notes.
std::string to_json(const ExperimentResult& result);
std::string manifest_json(const RunManifest& manifest);

enum class OutputFormat { Csv, Json };

/// Writes <dir>/<name>.csv (or .json) and <dir>/<name>.manifest.json, each
/// through a temporary file and rename. Returns the table path.
std::filesystem::path write_result(const ExperimentResult& result, const std::filesystem::path& dir,
                                   OutputFormat format = OutputFormat::Csv);

enum class ChartKind { Lines, Heatmap };

/// Lines: first column on x, every other column as a series. Heatmap: columns
/// (x, y, value) named explicitly.
std::string render_svg(const ExperimentResult& result, ChartKind kind, const std::string& x = "",
                       const std::string& y = "", const std::string& value = "");
std::filesystem::path emit_svg(const ExperimentResult& result, ChartKind kind, const std::filesystem::path& dir,
                               const std::string& x = "", const std::string& y = "", const std::string& value = "");

/// Exclusive ownership of an output directory via <dir>/.lock.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace chiralsim
