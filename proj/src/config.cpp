#include "varlin/config.hpp"

#include <filesystem>
#include <fstream>

#include "varlin/csv.hpp"
#include "varlin/errors.hpp"
#include "varlin/kvfile.hpp"

namespace varlin {

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("n_grid must not be empty");
  for (size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("n_grid entries must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1])
      throw ConfigError("n_grid must be strictly increasing");
  }
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!(p0 > 2.0)) throw ConfigError("p0 must be > 2");
  if (l_rule != "sigma" && l_rule != "memory" && l_rule.rfind("const:", 0) != 0)
    throw ConfigError("l_rule must be sigma, memory or const:<v>");
  if (tolerance_profile != "default" && tolerance_profile != "strict")
    throw ConfigError("tolerance_profile must be default or strict");
  if (model.rfind("builtin:", 0) != 0) {
    if (!std::filesystem::exists(model))
      throw ConfigError("model file does not exist: " + model);
  }
  if (!profile.empty() && !std::filesystem::exists(profile))
    throw ConfigError("profile file does not exist: " + profile);
}

ExperimentConfig load_config(const std::string& path) {
  KvFile kv = KvFile::read(path);
  ExperimentConfig cfg;
  cfg.model = kv.get_or("model", cfg.model);
  cfg.profile = kv.get_or("profile", "");
  if (kv.has("n_grid"))
    for (const std::string& tok : KvFile::split_ws(kv.get("n_grid")))
      cfg.n_grid.push_back(int(parse_int(tok)));
  cfg.p0 = parse_double(kv.get_or("p0", "4"));
  cfg.l_rule = kv.get_or("l_rule", cfg.l_rule);
  cfg.seed = uint64_t(parse_int(kv.get_or("seed", "1")));
  cfg.replicates = int(parse_int(kv.get_or("replicates", "200")));
  cfg.threads = int(parse_int(kv.get_or("threads", "1")));
  cfg.out = kv.get_or("out", cfg.out);
  if (kv.has("diagnostics")) cfg.diagnostics = KvFile::split_ws(kv.get("diagnostics"));
  cfg.tolerance_profile = kv.get_or("tolerance_profile", cfg.tolerance_profile);
  cfg.eps0 = parse_double(kv.get_or("eps0", "1e-6"));
  cfg.grid_size = int(parse_int(kv.get_or("grid_size", "1024")));
  cfg.validate();
  return cfg;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config: " + path);
  out << "model = " << cfg.model << "\n";
  if (!cfg.profile.empty()) out << "profile = " << cfg.profile << "\n";
  out << "n_grid =";
  for (int n : cfg.n_grid) out << " " << n;
  out << "\n";
  out << "p0 = " << fmt_double(cfg.p0) << "\n";
  out << "l_rule = " << cfg.l_rule << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "replicates = " << cfg.replicates << "\n";
  out << "threads = " << cfg.threads << "\n";
  out << "out = " << cfg.out << "\n";
  if (!cfg.diagnostics.empty()) {
    out << "diagnostics =";
    for (const std::string& d : cfg.diagnostics) out << " " << d;
    out << "\n";
  }
  out << "tolerance_profile = " << cfg.tolerance_profile << "\n";
  out << "eps0 = " << fmt_double(cfg.eps0) << "\n";
  out << "grid_size = " << cfg.grid_size << "\n";
}

}  // namespace varlin
