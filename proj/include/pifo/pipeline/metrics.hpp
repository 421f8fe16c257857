#ifndef PIFO_PIPELINE_METRICS_HPP_
#define PIFO_PIPELINE_METRICS_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pifo {

// One row per completed iteration. An aborted iteration (non-finite training
// signal) carries NaN in the four update diagnostics.
struct MetricsRow {
  std::size_t iteration = 0;
  double wall_clock_s = 0.0;
  double disc_loss = 0.0;
  double mean_D_imitator = 0.0;
  double mean_D_expert = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double mean_true_return = 0.0;
  double mean_episode_len = 0.0;
  double normalized_score = 0.0;

  bool aborted() const;
};

inline constexpr std::string_view kMetricsHeader =
    "iteration,wall_clock_s,disc_loss,mean_D_imitator,mean_D_expert,policy_loss,value_loss,entropy,"
    "clip_fraction,mean_true_return,mean_episode_len,normalized_score";

// Full-precision (%.17g) CSV line without the trailing newline.
std::string format_metrics_row(const MetricsRow& row);

// Parses a metrics CSV. `source` names the file in FormatError messages, which
// also carry the 1-based line number.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text, std::string_view source);
std::vector<MetricsRow> load_metrics(const std::filesystem::path& path);

}  // namespace pifo

#endif  // PIFO_PIPELINE_METRICS_HPP_
