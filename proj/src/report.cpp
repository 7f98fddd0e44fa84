#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "filtering/config.hpp"
#include "filtering/harness.hpp"

namespace filtering {

std::string format_report_csv(const MseReport& report) {
  std::string out = "filter,epsilon,mse,stderr,n_trials,excluded\n";
  for (const auto& e : report.entries) {
    out += fmt::format("{},{},{},{},{},{}\n", e.filter, e.epsilon, e.mse,
                       e.stderr_, e.n_trials, e.excluded);
  }
  return out;
}

std::string format_histogram_csv(const SqueezeResult& result) {
  std::string out = "ratio_bin,count\n";
  for (std::size_t i = 0; i < result.histogram.size(); ++i) {
    out += fmt::format("{},{}\n", static_cast<double>(i) * result.bin_width,
                       result.histogram[i]);
  }
  return out;
}

namespace {
void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
  out << text;
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path));
}
}  // namespace

void write_report(const MseReport& report, const std::string& path) {
  write_file(path, format_report_csv(report));
  write_file(path + ".ini", format_config(report.config));
}

std::vector<MseEntry> read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  std::string line;
  std::getline(in, line);
  require(line == "filter,epsilon,mse,stderr,n_trials,excluded",
          fmt::format("report '{}': unexpected header", path));
  std::vector<MseEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == 6, fmt::format("report '{}': malformed row '{}'", path, line));
    MseEntry e;
    e.filter = cells[0];
    e.epsilon = std::stod(cells[1]);
    e.mse = std::stod(cells[2]);
    e.stderr_ = std::stod(cells[3]);
    e.n_trials = std::stoi(cells[4]);
    e.excluded = std::stoi(cells[5]);
    entries.push_back(e);
  }
  return entries;
}

}  // namespace filtering
