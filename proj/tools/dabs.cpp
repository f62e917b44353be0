#include <string>

#include "CLI11.hpp"
#include "dabs/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"data-driven abstraction and controller synthesis"};
  app.require_subcommand(1);

  std::string config_path;
  dabs::CommandOptions opt;

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"estimate-lipschitz", "extreme-value Lipschitz estimate per input"},
      {"sample-size", "scenario and distribution-free sample counts"},
      {"abstract", "build and save the finite abstraction"},
      {"synthesize", "solve the configured objective and save the controller"},
      {"refine-synthesize", "grid refinement loop driven by a paired growth table"},
      {"simulate", "closed-loop rollouts under the saved controller"},
      {"sweep", "parameter sweeps of the sample-size / bias formulas"},
      {"pac-compare", "winning sets: scenario build vs distribution-free build"},
      {"compare-winning", "winning-set diff of two saved controllers"},
  };
  std::string chosen;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_option("--workers", opt.workers, "worker threads (0 = all cores)");
    if (std::string(s.name) == "compare-winning") {
      sub->add_option("--controller-a", opt.controller_a, "first controller file")
          ->required();
      sub->add_option("--controller-b", opt.controller_b, "second controller file")
          ->required();
    }
    sub->callback([&chosen, name = std::string(s.name)] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : dabs::kExitConfig;
  }
  return dabs::run_command(chosen, config_path, opt);
}
