#include "chiralsim/io.hpp"

#include "chiralsim/types.hpp"

#include <json.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace chiralsim {

void Table::add(std::vector<double> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("row has " + std::to_string(row.size()) + " values for " +
                           std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

bool Table::has(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

std::size_t Table::index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("table has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::column(const std::string& name) const {
  std::size_t c = index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

double ExperimentResult::metric(const std::string& key) const {
  auto it = metrics.find(key);
  if (it == metrics.end()) throw std::out_of_range("no metric '" + key + "' in " + name);
  return it->second;
}

const std::string& ExperimentResult::label(const std::string& key) const {
  auto it = labels.find(key);
  if (it == labels.end()) throw std::out_of_range("no label '" + key + "' in " + name);
  return it->second;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop negative zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table table;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };
  if (!std::getline(in, line)) throw ConfigError("CSV input has no header row");
  table.columns = split(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (cells.size() != table.columns.size()) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(table.columns.size()) +
                        " cells");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw ConfigError("CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

namespace {

using nlohmann::ordered_json;

ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_number(v));
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace

std::string to_json(const ExperimentResult& result) {
  ordered_json j;
  j["experiment"] = result.name;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : result.parameters) params[k] = v;
  j["parameters"] = params;
  j["columns"] = result.table.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : result.table.rows) {
    ordered_json r = ordered_json::array();
    for (double v : row) r.push_back(number(v));
    rows.push_back(r);
  }
  j["rows"] = rows;
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : result.metrics) metrics[k] = number(v);
  j["metrics"] = metrics;
  ordered_json labels = ordered_json::object();
  for (const auto& [k, v] : result.labels) labels[k] = v;
  j["labels"] = labels;
  j["notes"] = result.notes;
  return j.dump(2) + "\n";
}

std::string manifest_json(const RunManifest& m) {
  ordered_json j;
  j["experiment"] = m.experiment;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["method"] = m.method;
  j["dt_ns"] = number(m.dt_ns);
  ordered_json drift = ordered_json::object();
  for (const auto& [k, v] : m.drift) drift[k] = number(v);
  j["drift"] = drift;
  ordered_json wall = ordered_json::object();
  for (const auto& [k, v] : m.wall_ms) wall[k] = number(v);
  j["wall_ms"] = wall;
  return j.dump(2) + "\n";
}

std::filesystem::path write_result(const ExperimentResult& result, const std::filesystem::path& dir,
                                   OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto table_path = dir / (result.name + (format == OutputFormat::Csv ? ".csv" : ".json"));
  write_atomic(table_path, format == OutputFormat::Csv ? to_csv(result.table) : to_json(result));
  write_atomic(dir / (result.name + ".manifest.json"), manifest_json(result.manifest));
  return table_path;
}

namespace {

constexpr double kWidth = 760.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::pair<double, double> range_of(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : v) {
    if (!std::isfinite(x)) continue;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string frame_open(const std::string& title) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(kLeft) << "\" y=\"18\">" << escape(title) << "</text>\n";
  return os.str();
}

std::string axes(const std::string& xname, std::pair<double, double> xr, const std::string& yname,
                 std::pair<double, double> yr) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::ostringstream os;
  os << "<rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y1) << "\" width=\"" << fixed(x1 - x0) << "\" height=\""
     << fixed(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << fixed(x0) << "\" y=\"" << fixed(y0 + 16) << "\">" << format_number(xr.first) << "</text>\n";
  os << "<text x=\"" << fixed(x1) << "\" y=\"" << fixed(y0 + 16) << "\" text-anchor=\"end\">"
     << format_number(xr.second) << "</text>\n";
  os << "<text x=\"" << fixed(0.5 * (x0 + x1)) << "\" y=\"" << fixed(y0 + 36) << "\" text-anchor=\"middle\">"
     << escape(xname) << "</text>\n";
  os << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(y0) << "\" text-anchor=\"end\">"
     << format_number(yr.first) << "</text>\n";
  os << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(y1 + 10) << "\" text-anchor=\"end\">"
     << format_number(yr.second) << "</text>\n";
  os << "<text x=\"14\" y=\"" << fixed(0.5 * (y0 + y1)) << "\" transform=\"rotate(-90 14 "
     << fixed(0.5 * (y0 + y1)) << ")\" text-anchor=\"middle\">" << escape(yname) << "</text>\n";
  return os.str();
}

std::string heat_color(double f) {
  // Dark blue -> teal -> yellow.
  f = std::clamp(f, 0.0, 1.0);
  const double stops[3][3] = {{68, 1, 84}, {33, 145, 140}, {253, 231, 37}};
  double s = f * 2.0;
  int i = std::min(1, static_cast<int>(s));
  double u = s - i;
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[i][c] + u * (stops[i + 1][c] - stops[i][c])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string render_svg(const ExperimentResult& result, ChartKind kind, const std::string& x, const std::string& y,
                       const std::string& value) {
  const Table& t = result.table;
  if (t.empty() || t.columns.empty()) throw IoError("cannot chart an empty table");
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  std::string out = frame_open(result.name);

  if (kind == ChartKind::Lines) {
    std::string xname = x.empty() ? t.columns.front() : x;
    auto xs = t.column(xname);
    auto xr = range_of(xs);
    std::vector<std::string> series;
    for (const auto& c : t.columns) {
      if (c != xname) series.push_back(c);
    }
    std::vector<double> all;
    for (const auto& s : series) {
      auto v = t.column(s);
      all.insert(all.end(), v.begin(), v.end());
    }
    auto yr = range_of(all);
    out += axes(xname, xr, series.size() == 1 ? series.front() : "value", yr);
    for (std::size_t s = 0; s < series.size(); ++s) {
      auto ys = t.column(series[s]);
      const char* color = kPalette[s % std::size(kPalette)];
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(ys[i])) continue;
        double px = x0 + (xs[i] - xr.first) / (xr.second - xr.first) * (x1 - x0);
        double py = y0 - (ys[i] - yr.first) / (yr.second - yr.first) * (y0 - y1);
        if (i) out += ' ';
        out += fixed(px) + "," + fixed(py);
      }
      out += "\"/>\n";
      double ly = y1 + 16.0 * static_cast<double>(s) + 8.0;
      out += "<line x1=\"" + fixed(x1 + 12) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(x1 + 32) + "\" y2=\"" +
             fixed(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
      out += "<text x=\"" + fixed(x1 + 38) + "\" y=\"" + fixed(ly + 4) + "\">" + escape(series[s]) + "</text>\n";
    }
  } else {
    if (x.empty() || y.empty() || value.empty()) throw IoError("heatmap needs x, y and value columns");
    auto xs = t.column(x), ys = t.column(y), vs = t.column(value);
    std::vector<double> ux = xs, uy = ys;
    std::sort(ux.begin(), ux.end());
    ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
    std::sort(uy.begin(), uy.end());
    uy.erase(std::unique(uy.begin(), uy.end()), uy.end());
    auto vr = range_of(vs);
    out += axes(x, {ux.front(), ux.back()}, y, {uy.front(), uy.back()});
    double cw = (x1 - x0) / static_cast<double>(ux.size());
    double ch = (y0 - y1) / static_cast<double>(uy.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
      auto cx = static_cast<double>(std::lower_bound(ux.begin(), ux.end(), xs[i]) - ux.begin());
      auto cy = static_cast<double>(std::lower_bound(uy.begin(), uy.end(), ys[i]) - uy.begin());
      double f = (vs[i] - vr.first) / (vr.second - vr.first);
      out += "<rect x=\"" + fixed(x0 + cx * cw) + "\" y=\"" + fixed(y0 - (cy + 1.0) * ch) + "\" width=\"" +
             fixed(cw + 0.05) + "\" height=\"" + fixed(ch + 0.05) + "\" fill=\"" + heat_color(f) + "\"/>\n";
    }
    for (int s = 0; s <= 10; ++s) {
      double f = s / 10.0;
      double py = y0 - f * (y0 - y1);
      out += "<rect x=\"" + fixed(x1 + 16) + "\" y=\"" + fixed(py - 0.1 * (y0 - y1)) + "\" width=\"16\" height=\"" +
             fixed(0.1 * (y0 - y1)) + "\" fill=\"" + heat_color(f) + "\"/>\n";
    }
    out += "<text x=\"" + fixed(x1 + 38) + "\" y=\"" + fixed(y1 + 10) + "\">" + format_number(vr.second) + "</text>\n";
    out += "<text x=\"" + fixed(x1 + 38) + "\" y=\"" + fixed(y0) + "\">" + format_number(vr.first) + "</text>\n";
    out += "<text x=\"" + fixed(x1 + 16) + "\" y=\"" + fixed(y0 + 36) + "\">" + escape(value) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::filesystem::path emit_svg(const ExperimentResult& result, ChartKind kind, const std::filesystem::path& dir,
                               const std::string& x, const std::string& y, const std::string& value) {
  std::string svg = render_svg(result, kind, x, y, value);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  auto path = dir / (result.name + ".svg");
  write_atomic(path, svg);
  return path;
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd_ < 0) {
    if (errno == EEXIST) throw IoError("output directory " + dir.string() + " is locked by another run");
    throw IoError("cannot create lock " + path_.string() + ": " + std::strerror(errno));
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto written = ::write(fd_, pid.data(), pid.size());
}

DirectoryLock::~DirectoryLock() {
  if (fd_ >= 0) {
    ::close(fd_);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
}

}  // namespace chiralsim
