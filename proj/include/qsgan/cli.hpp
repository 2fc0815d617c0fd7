#pragma once

#include <string>
#include <vector>

#include "qsgan/config.hpp"
#include "qsgan/genomics.hpp"
#include "qsgan/training.hpp"

namespace qsgan::cli {

struct PrepArgs {
  std::vector<std::string> fasta_paths;
  std::string reference_id;  // empty: first record
  std::uint64_t seed = 42;
  std::string out_dir = ".";
  int synthetic = 0;  // > 0: fabricate a synthetic cohort of this size instead
};

struct TrainArgs {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct GenerateArgs {
  std::string checkpoint;
  std::string cohort;  // empty: the path recorded in the checkpoint config
  long long count = 10;
  std::string strain = "delta";
  int k = 0;  // 0: strain preset
  std::uint64_t seed = 42;
  std::string out_dir = ".";
};

struct FidelityArgs {
  std::string checkpoint;
  std::string cohort;
  int n_gen = 10;
  int n_real = 10;
  std::string metric = "super";  // super | uhlmann
  std::uint64_t seed = 42;
  std::string out_csv = "fidelity.csv";
  bool self_grid = false;
  std::string dump_dir;  // when set, states are also written as QDM1 files
};

struct FreqArgs {
  std::string input;      // FASTA fragments/genomes or a variations JSON
  std::string reference;  // FASTA or cohort JSON
  std::string out_csv = "frequency.csv";
};

int cmd_prep(const PrepArgs& args);
int cmd_train(const TrainArgs& args);
int cmd_generate(const GenerateArgs& args);
int cmd_fidelity(const FidelityArgs& args);
int cmd_freq(const FreqArgs& args);

// shared by generate/fidelity and by the acceptance suite
RMat upsample_map_to(const RMat& map, long long target_side);
std::vector<DensityMatrix> generate_states(const Trainer& trainer, int count, Rng& rng);

int run_cli(int argc, const char* const* argv);

}  // namespace qsgan::cli
