#ifndef DABS_CONFIG_HPP_
#define DABS_CONFIG_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dabs/abstraction.hpp"
#include "dabs/synthesis.hpp"
#include "dabs/systems.hpp"

namespace dabs {

/* sectioned key = value text file; '#' starts a comment, vectors are
 * whitespace separated, matrix rows and repeated items use ';' */
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text, const std::string& origin);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  uint64_t get_u64(const std::string& section, const std::string& key) const;
  uint64_t get_u64(const std::string& section, const std::string& key,
                   uint64_t fallback) const;
  Vec get_vec(const std::string& section, const std::string& key) const;
  Vec get_vec(const std::string& section, const std::string& key,
              const Vec& fallback) const;
  Mat get_mat(const std::string& section, const std::string& key) const;
  /* boxes as "lo... ; hi..." pairs separated by '|' */
  std::vector<Box> get_boxes(const std::string& section, const std::string& key) const;
  /* ';'-separated list of vectors */
  std::vector<Vec> get_vec_list(const std::string& section, const std::string& key) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;

  const std::string& raw(const std::string& section, const std::string& key) const;
};

enum class LipschitzSource { Fixed, Estimate };

struct LipschitzConfig {
  LipschitzSource source = LipschitzSource::Fixed;
  double fixed_value = 1.0;
  unsigned n_inner = 100;
  unsigned m_blocks = 200;
  std::optional<double> delta;  /* default: min state-box width / 100 */
  double safety = 1.0;
};

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::Reach;
  std::vector<Box> target_boxes;
  std::vector<Box> avoid_boxes;
  Vec x_init;
  bool has_x_init = false;
};

struct SimulateConfig {
  size_t horizon = 100;
  size_t runs = 1;
  DisturbancePolicy policy = DisturbancePolicy::Zero;
  uint64_t seed = 0;
};

enum class SweepKind { BetaVsN, EpsVsN, EpsVsGamma };

struct SweepConfig {
  SweepKind kind = SweepKind::BetaVsN;
  Vec values;
};

struct RefineConfig {
  Vec eta0;
  size_t max_halvings = 4;
  size_t max_cells = 4000000;
};

/* everything a subcommand needs, validated */
struct RunConfig {
  SystemModel system;
  UniformGrid grid;                 /* state grid (standard mode) */
  std::vector<Vec> inputs;
  BuildConfig build;
  LipschitzConfig lipschitz;
  ObjectiveConfig objective;
  SimulateConfig simulate;
  std::optional<SweepConfig> sweep;
  std::optional<RefineConfig> refine;
  std::string output_dir = "out";

  RunConfig(SystemModel s, UniformGrid g) : system(std::move(s)), grid(std::move(g)) {}
};

/* parses, assembles the system/grid/inputs and cross-validates (boxes inside X,
 * eps/beta ranges, x_init membership, mandatory seed); throws ConfigError */
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_file(const ConfigFile& file);

/* resolves per-input Lipschitz constants per the [lipschitz] section, running
 * the estimator if requested */
std::vector<double> resolve_lipschitz(const SystemModel& sys,
                                      const std::vector<Vec>& inputs,
                                      const LipschitzConfig& cfg, uint64_t seed,
                                      unsigned workers);

}  // namespace dabs

#endif
