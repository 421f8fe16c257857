#include "pifo/pipeline/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"

namespace pifo {

namespace {

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

bool MetricsRow::aborted() const {
  return std::isnan(policy_loss) && std::isnan(value_loss) && std::isnan(entropy) && std::isnan(clip_fraction);
}

std::string format_metrics_row(const MetricsRow& r) {
  std::string out = std::to_string(r.iteration);
  for (double v : {r.wall_clock_s, r.disc_loss, r.mean_D_imitator, r.mean_D_expert, r.policy_loss, r.value_loss,
                   r.entropy, r.clip_fraction, r.mean_true_return, r.mean_episode_len, r.normalized_score}) {
    out += ',';
    out += g17(v);
  }
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::vector<MetricsRow> rows;
  auto fail = [&](const std::string& why) {
    throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kMetricsHeader) fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 12) fail("expected 12 fields, got " + std::to_string(cells.size()));
    double v[12];
    for (std::size_t i = 0; i < 12; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(cells[i].c_str(), &end);
      if (cells[i].empty() || end != cells[i].c_str() + cells[i].size()) fail("field " + std::to_string(i + 1) + " '" + cells[i] + "' is not a number");
    }
    if (!(v[0] >= 0.0) || v[0] != std::floor(v[0])) fail("iteration must be a non-negative integer");
    MetricsRow r{static_cast<std::size_t>(v[0]), v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9], v[10], v[11]};
    if (!rows.empty() && r.iteration <= rows.back().iteration) fail("iterations must be strictly increasing");
    rows.push_back(r);
  }
  if (line_no == 0) throw FormatError(std::string(source) + ": empty metrics file");
  return rows;
}

std::vector<MetricsRow> load_metrics(const std::filesystem::path& path) {
  return parse_metrics_csv(read_file(path), path.string());
}

}  // namespace pifo
