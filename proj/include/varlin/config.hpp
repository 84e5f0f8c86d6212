#ifndef VARLIN_CONFIG_HPP
#define VARLIN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace varlin {

struct ExperimentConfig {
  std::string model = "builtin:iid_pm1";  // builtin:<name> or a model file path
  std::string profile;                     // optional declared-profile CSV
  std::vector<int> n_grid;
  double p0 = 4.0;
  std::string l_rule = "sigma";  // const:<v> | sigma | memory
  uint64_t seed = 1;
  int replicates = 200;
  int threads = 1;
  std::string out = "out";
  std::vector<std::string> diagnostics = {"dk", "qv", "mdp", "moments",
                                          "bounds"};  // empty: none
  std::string tolerance_profile = "default";
  double eps0 = 1e-6;
  int grid_size = 1024;

  void validate() const;  // throws ConfigError
};

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);

}  // namespace varlin

#endif
