#include "pifo/rl/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <type_traits>
#include <variant>
#include <vector>

#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"

namespace pifo::rl {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || std::isnan(out)) {
    throw ConfigError("config key '" + std::string(key) + "': '" + value + "' is not a number");
  }
  return out;
}

std::uint64_t parse_unsigned(std::string_view key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + std::string(key) + "': '" + value + "' is not a non-negative integer");
  }
  return out;
}

bool parse_bool(std::string_view key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': '" + value + "' is not a boolean");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Member = std::variant<double TrainConfig::*, std::size_t TrainConfig::*, bool TrainConfig::*,
                            std::string TrainConfig::*>;

// Declaration order, which is also the serialization order.
const std::vector<std::pair<std::string_view, Member>>& fields() {
  static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed shares the unsigned field kind");
  static const std::vector<std::pair<std::string_view, Member>> table = {
      {"gamma", &TrainConfig::gamma},
      {"gae_lambda", &TrainConfig::gae_lambda},
      {"clip_ratio", &TrainConfig::clip_ratio},
      {"entropy_coef", &TrainConfig::entropy_coef},
      {"policy_lr", &TrainConfig::policy_lr},
      {"value_lr", &TrainConfig::value_lr},
      {"disc_lr", &TrainConfig::disc_lr},
      {"rollout_steps", &TrainConfig::rollout_steps},
      {"minibatch", &TrainConfig::minibatch},
      {"ppo_epochs", &TrainConfig::ppo_epochs},
      {"iterations", &TrainConfig::iterations},
      {"seed", &TrainConfig::seed},
      {"disc_epochs", &TrainConfig::disc_epochs},
      {"disc_minibatch", &TrainConfig::disc_minibatch},
      {"num_envs", &TrainConfig::num_envs},
      {"eval_every", &TrainConfig::eval_every},
      {"eval_episodes", &TrainConfig::eval_episodes},
      {"checkpoint_every", &TrainConfig::checkpoint_every},
      {"stop_score", &TrainConfig::stop_score},
      {"record_wall_clock", &TrainConfig::record_wall_clock},
      {"env", &TrainConfig::env},
      {"mode", &TrainConfig::mode},
      {"demos", &TrainConfig::demos},
      {"expert_checkpoint", &TrainConfig::expert_checkpoint},
      {"label", &TrainConfig::label},
  };
  return table;
}

}  // namespace

void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  for (const auto& [name, field] : fields()) {
    if (name != key) continue;
    std::visit(
        [&](auto ptr) {
          using T = std::remove_reference_t<decltype(cfg.*ptr)>;
          if constexpr (std::is_same_v<T, double>) cfg.*ptr = parse_double(key, value);
          else if constexpr (std::is_same_v<T, std::size_t>) cfg.*ptr = parse_unsigned(key, value);
          else if constexpr (std::is_same_v<T, bool>) cfg.*ptr = parse_bool(key, value);
          else cfg.*ptr = value;
        },
        field);
    return;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::string_view text, TrainConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
    }
    set_config_value(base, trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const UsageError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse_config(text, std::move(base));
}

std::string serialize_config(const TrainConfig& cfg) {
  std::string out;
  for (const auto& [name, field] : fields()) {
    out += name;
    out += '=';
    std::visit(
        [&](auto ptr) {
          using T = std::remove_cvref_t<decltype(cfg.*ptr)>;
          if constexpr (std::is_same_v<T, double>) out += format_double(cfg.*ptr);
          else if constexpr (std::is_same_v<T, std::size_t>) out += std::to_string(cfg.*ptr);
          else if constexpr (std::is_same_v<T, bool>) out += cfg.*ptr ? "true" : "false";
          else out += cfg.*ptr;
        },
        field);
    out += '\n';
  }
  return out;
}

void validate(const TrainConfig& cfg) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  require(cfg.gamma > 0.0 && cfg.gamma <= 1.0, "gamma must lie in (0, 1]");
  require(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(cfg.clip_ratio > 0.0, "clip_ratio must be positive");
  require(cfg.entropy_coef >= 0.0 && std::isfinite(cfg.entropy_coef), "entropy_coef must be finite and >= 0");
  require(cfg.policy_lr > 0.0 && std::isfinite(cfg.policy_lr), "policy_lr must be positive");
  require(cfg.value_lr > 0.0 && std::isfinite(cfg.value_lr), "value_lr must be positive");
  require(cfg.disc_lr > 0.0 && std::isfinite(cfg.disc_lr), "disc_lr must be positive");
  require(cfg.rollout_steps > 0, "rollout_steps must be positive");
  require(cfg.minibatch > 0, "minibatch must be positive");
  require(cfg.disc_minibatch > 0, "disc_minibatch must be positive");
  require(cfg.num_envs > 0 && cfg.num_envs <= cfg.rollout_steps, "num_envs must lie in [1, rollout_steps]");
  require(cfg.eval_every > 0, "eval_every must be positive");
  require(cfg.eval_episodes >= 2, "eval_episodes must be at least 2");
  require(cfg.checkpoint_every > 0, "checkpoint_every must be positive");
  require(cfg.env.find('\n') == std::string::npos && cfg.label.find('\n') == std::string::npos,
          "string values must be single-line");
}

}  // namespace pifo::rl
