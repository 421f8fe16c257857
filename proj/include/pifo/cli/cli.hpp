#ifndef PIFO_CLI_CLI_HPP_
#define PIFO_CLI_CLI_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pifo::cli {

enum class CommandKind { kHelp, kTrainExpert, kRecordDemos, kImitate, kEvaluate, kReport };

struct Command {
  CommandKind kind = CommandKind::kHelp;
  std::string help_text;  // kHelp only

  std::string env;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string checkpoint;
  std::string expert_checkpoint;
  std::size_t num_trajectories = 0;
  bool deterministic = true;
  std::string demos;
  std::string mode;
  std::size_t episodes = 0;
  std::vector<std::string> run_dirs;
};

// Throws UsageError with a one-line message naming the offending flag.
Command parse_args(int argc, const char* const* argv);
Command parse_args(const std::vector<std::string>& args);  // args exclude the program name

// Executes a parsed command, printing a one-line result to `out`. Returns the exit code.
int run(const Command& cmd, std::ostream& out);

// Parses, runs, and maps every failure to a one-line diagnostic on `err`:
// exit 2 for usage errors, 1 for anything else.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pifo::cli

#endif  // PIFO_CLI_CLI_HPP_
