#pragma once

#include <cstdint>
#include <string>

namespace qsgan {

// Runtime configuration. Loaded from `key = value` text (# comments allowed);
// command-line flags override file values.
struct RunConfig {
  std::uint64_t seed = 42;
  int qubit_max = 10;  // even; the progressive maximum depth is qubit_max / 2
  int latent_dim = 64;
  int style_dim = 64;
  int channels = 8;
  int fade_steps = 100;
  int stab_steps = 100;
  std::string loss = "logistic";  // logistic | relativistic-hinge
  int batch_size = 8;
  double learning_rate = 1e-3;
  std::string strain = "delta";  // delta | omicron
  long long steps = 600;
  int log_interval = 74;
  long long checkpoint_interval = 200;
  bool noise = true;
  std::string discriminator = "quantum";  // quantum | classical
  double gamma1 = 10.0;
  double gamma2 = 0.0;
  std::string cohort;
  std::string out_dir = ".";

  int max_depth() const { return qubit_max / 2; }
  void validate() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);
// also used for CLI overrides; throws BadConfig on unknown keys or bad values
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);
// canonical serialization (fixed key order), embedded in checkpoints
std::string config_to_string(const RunConfig& cfg);
std::uint64_t config_digest(const RunConfig& cfg);

}  // namespace qsgan
