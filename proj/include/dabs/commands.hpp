#ifndef DABS_COMMANDS_HPP_
#define DABS_COMMANDS_HPP_

#include <string>

#include "dabs/config.hpp"

namespace dabs {

/* exit codes shared by the CLI and the command implementations */
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitEmpty = 3;

struct CommandOptions {
  unsigned workers = 0;  /* 0 = all available cores */
  std::string controller_a, controller_b;  /* compare-winning */
};

int cmd_estimate_lipschitz(const RunConfig& cfg, const CommandOptions& opt);
int cmd_sample_size(const RunConfig& cfg, const CommandOptions& opt);
int cmd_abstract(const RunConfig& cfg, const CommandOptions& opt);
int cmd_synthesize(const RunConfig& cfg, const CommandOptions& opt);
int cmd_refine_synthesize(const RunConfig& cfg, const CommandOptions& opt);
int cmd_simulate(const RunConfig& cfg, const CommandOptions& opt);
int cmd_sweep(const RunConfig& cfg, const CommandOptions& opt);
int cmd_pac_compare(const RunConfig& cfg, const CommandOptions& opt);
int cmd_compare_winning(const RunConfig& cfg, const CommandOptions& opt);

/* maps a thrown exception to the documented exit code and prints the message */
int run_command(const std::string& name, const std::string& config_path,
                const CommandOptions& opt);

/* conventional output file names under [output] dir */
std::string abstraction_path(const RunConfig& cfg);
std::string controller_path(const RunConfig& cfg);

}  // namespace dabs

#endif
