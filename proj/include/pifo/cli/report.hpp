#ifndef PIFO_CLI_REPORT_HPP_
#define PIFO_CLI_REPORT_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pifo/pipeline/metrics.hpp"

namespace pifo::cli {

struct RunSeries {
  std::string label;  // config `label`, else "<env>:<mode>", else the directory name
  std::string dir;
  std::vector<MetricsRow> rows;
};

RunSeries load_run(const std::filesystem::path& dir);

// First iteration whose normalized score is >= threshold.
std::optional<std::size_t> first_iteration_reaching(const std::vector<MetricsRow>& rows, double threshold);

// SVG documents (800x500 viewBox, no external references).
// curves: one polyline per run; per label with >= 2 runs, the mean over runs
// at iterations all of them share, with a band of +- sample std / sqrt(n).
std::string render_curves_svg(const std::vector<RunSeries>& runs);
// bars: mean final score per label with +- standard-error whiskers.
std::string render_bars_svg(const std::vector<RunSeries>& runs);
// label,run_dir,final_iteration,final_normalized_score,first_iteration_at_0.8
std::string render_summary_csv(const std::vector<RunSeries>& runs);

// Writes curves.svg, bars.svg and summary.csv into out_dir.
void emit_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

}  // namespace pifo::cli

#endif  // PIFO_CLI_REPORT_HPP_
