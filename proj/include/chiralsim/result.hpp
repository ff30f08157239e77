// Tabular experiment output and its run manifest.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace chiralsim {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  bool empty() const { return rows.empty(); }
  void add(std::vector<double> row);
  bool has(const std::string& name) const;
  std::size_t index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string method;
  double dt_ns = 0.0;
  std::vector<std::pair<std::string, double>> drift;
  std::vector<std::pair<std::string, double>> wall_ms;
};

struct ExperimentResult {
  std::string name;
  std::vector<std::pair<std::string, std::string>> parameters;
  Table table;
  std::map<std::string, double> metrics;
  std::map<std::string, std::string> labels;
  std::vector<std::string> notes;
  RunManifest manifest;

  double metric(const std::string& key) const;
  const std::string& label(const std::string& key) const;
};

}  // namespace chiralsim
