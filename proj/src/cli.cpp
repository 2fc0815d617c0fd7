#include "qsgan/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qsgan/parallel.hpp"
#include "qsgan/qlayers.hpp"

namespace fs = std::filesystem;

namespace qsgan::cli {

namespace {

genomics::SpikeCohort load_cohort_or_fail(const std::string& path) {
  if (path.empty()) fail(ErrorKind::BadConfig, "a cohort file is required");
  return genomics::SpikeCohort::load(path);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

}  // namespace

RMat upsample_map_to(const RMat& map, long long target_side) {
  RMat out = map;
  while (out.rows() < target_side) {
    RMat up(out.rows() * 4, out.cols() * 4);
    for (long long r = 0; r < up.rows(); ++r)
      for (long long c = 0; c < up.cols(); ++c) up(r, c) = out(r / 4, c / 4);
    out = std::move(up);
  }
  if (out.rows() != target_side) fail(ErrorKind::BadShape, "map side is not a power of four");
  return out;
}

// generated maps upsampled to the full 1024 side and encoded as 10-qubit
// states, the representation the decode path and the fidelity reports use
std::vector<DensityMatrix> generate_states(const Trainer& trainer, int count, Rng& rng) {
  const auto [depth, alpha] = trainer.schedule_at(trainer.step_count);
  std::vector<DensityMatrix> states;
  states.reserve(count);
  for (int i = 0; i < count; ++i) {
    RVec z(trainer.cfg.latent_dim);
    for (int k = 0; k < z.size(); ++k) z[k] = rng.normal();
    const RMat map = trainer.gen.generate(z, depth, alpha, &rng);
    states.push_back(
        trainer.encode_generated(upsample_map_to(map, genomics::kCompressedLength)));
  }
  return states;
}

int cmd_prep(const PrepArgs& args) {
  fs::create_directories(args.out_dir);
  std::vector<genomics::FastaRecord> records;
  if (args.synthetic > 0) {
    genomics::SyntheticCohortSpec spec;
    spec.count = args.synthetic;
    spec.seed = args.seed;
    records = genomics::synthetic_cohort(spec);
    genomics::write_fasta(join_path(args.out_dir, "synthetic.fasta"), records);
  } else {
    if (args.fasta_paths.empty())
      fail(ErrorKind::BadConfig, "provide aligned FASTA inputs or --synthetic");
    for (const std::string& path : args.fasta_paths) {
      const auto batch = genomics::read_fasta(path);
      records.insert(records.end(), batch.begin(), batch.end());
    }
  }

  size_t ref_index = 0;
  if (!args.reference_id.empty()) {
    bool found = false;
    for (size_t i = 0; i < records.size(); ++i)
      if (records[i].id == args.reference_id) {
        ref_index = i;
        found = true;
        break;
      }
    if (!found) fail(ErrorKind::BadConfig, "reference id not found: " + args.reference_id);
  }
  const genomics::AlignedGenome reference{records[ref_index].id, records[ref_index].seq};
  std::vector<genomics::AlignedGenome> genomes;
  for (size_t i = 0; i < records.size(); ++i)
    if (i != ref_index) genomes.push_back({records[i].id, records[i].seq});
  if (genomes.empty()) fail(ErrorKind::BadConfig, "no cohort sequences besides the reference");

  const genomics::SpikeCohort cohort = genomics::SpikeCohort::build(genomes, reference, args.seed);
  cohort.save(join_path(args.out_dir, "cohort.json"));

  long long mutated = 0, neighbor = 0, random = 0;
  for (const auto& kp : cohort.kept) {
    if (kp.kind == genomics::KeptKind::Mutated) ++mutated;
    if (kp.kind == genomics::KeptKind::Neighbor) ++neighbor;
    if (kp.kind == genomics::KeptKind::Random) ++random;
  }
  nlohmann::ordered_json summary;
  summary["sequences"] = cohort.fragments.size();
  summary["total_mutations"] = cohort.total_mutations();
  summary["kept"] = {{"mutated", mutated}, {"neighbor", neighbor}, {"random", random}};
  std::ofstream os(join_path(args.out_dir, "cohort_summary.json"), std::ios::binary);
  os << summary.dump(1, '\t') << '\n';

  std::cout << "cohort: " << cohort.fragments.size() << " sequences, "
            << cohort.total_mutations() << " mutations, kept " << mutated << " mutated / "
            << neighbor << " neighbor / " << random << " random\n";
  return 0;
}

int cmd_train(const TrainArgs& args) {
  RunConfig cfg =
      args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
  for (const auto& [key, value] : args.overrides) apply_config_entry(cfg, key, value);
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  const genomics::SpikeCohort cohort = load_cohort_or_fail(cfg.cohort);
  Trainer trainer(cfg);

  std::vector<LossRecord> records;
  for (long long s = 0; s < cfg.steps; ++s) {
    const LossRecord rec = trainer.train_step(trainer.sample_batch(cohort.vectors));
    if (rec.step % cfg.log_interval == 0) records.push_back(rec);
    if ((rec.step + 1) % cfg.checkpoint_interval == 0)
      trainer.save_checkpoint(
          join_path(cfg.out_dir, "checkpoint_" + std::to_string(rec.step + 1) + ".qgan"));
  }
  write_loss_csv(join_path(cfg.out_dir, "losses.csv"), records);
  trainer.save_checkpoint(join_path(cfg.out_dir, "checkpoint_final.qgan"));
  const auto [depth, alpha] = trainer.schedule_at(trainer.step_count);
  std::cout << "trained " << cfg.steps << " steps to depth " << depth << " (alpha " << alpha
            << "), wrote " << records.size() << " loss rows\n";
  return 0;
}

int cmd_generate(const GenerateArgs& args) {
  Trainer trainer = Trainer::load_checkpoint(args.checkpoint);
  const std::string cohort_path = args.cohort.empty() ? trainer.cfg.cohort : args.cohort;
  const genomics::SpikeCohort cohort = load_cohort_or_fail(cohort_path);
  const int k = args.k > 0 ? args.k : genomics::strain_k(args.strain);
  fs::create_directories(args.out_dir);

  const auto [depth, alpha] = trainer.schedule_at(trainer.step_count);
  Rng rng(args.seed);
  nlohmann::ordered_json variations = nlohmann::ordered_json::array();
  std::vector<genomics::FastaRecord> mapped;
  for (long long i = 0; i < args.count; ++i) {
    RVec z(trainer.cfg.latent_dim);
    for (int q = 0; q < z.size(); ++q) z[q] = rng.normal();
    const RMat map = trainer.gen.generate(z, depth, alpha, &rng);
    const RMat full = upsample_map_to(map, genomics::kCompressedLength);
    const std::uint64_t record_seed = rng.raw();
    genomics::VariationStructure vs = genomics::decode_variation(full, k, cohort.kept);
    vs.seed = record_seed;
    const std::string& strain_fragment =
        cohort.fragments[rng.below(cohort.fragments.size())];
    const std::string fragment = genomics::map_to_strain(vs, strain_fragment, record_seed);

    nlohmann::ordered_json rec;
    rec["positions_1024"] = vs.positions_1024;
    rec["positions_3822"] = vs.positions_3822;
    rec["positions_genome"] = vs.positions_genome;
    rec["k"] = vs.k;
    rec["seed"] = vs.seed;
    variations.push_back(std::move(rec));
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "gen_%04lld", i + 1);
    mapped.push_back({idbuf, fragment});
  }

  std::ofstream os(join_path(args.out_dir, "variations.json"), std::ios::binary);
  os << variations.dump(1, '\t') << '\n';
  genomics::write_fasta(join_path(args.out_dir, "generated.fasta"), mapped);
  std::cout << "generated " << args.count << " variation structures (k = " << k << ") at depth "
            << depth << "\n";
  return 0;
}

int cmd_fidelity(const FidelityArgs& args) {
  if (args.n_gen < 1 || args.n_real < 1)
    fail(ErrorKind::BadConfig, "fidelity grid needs at least one state per side");
  if (args.metric != "super" && args.metric != "uhlmann")
    fail(ErrorKind::BadConfig, "metric must be super or uhlmann");
  Trainer trainer = Trainer::load_checkpoint(args.checkpoint);
  const std::string cohort_path = args.cohort.empty() ? trainer.cfg.cohort : args.cohort;
  const genomics::SpikeCohort cohort = load_cohort_or_fail(cohort_path);

  Rng rng(args.seed);
  const std::vector<DensityMatrix> gen_states = generate_states(trainer, args.n_gen, rng);

  std::vector<DensityMatrix> real_states;
  std::vector<std::string> real_ids;
  if (args.self_grid) {
    real_states = gen_states;
    for (int i = 0; i < args.n_gen; ++i) real_ids.push_back("gen_" + std::to_string(i + 1));
  } else {
    for (int j = 0; j < args.n_real; ++j) {
      const size_t idx = static_cast<size_t>(rng.below(cohort.vectors.size()));
      real_states.push_back(encode_vector(cohort.vectors[idx]));
      real_ids.push_back(cohort.ids[idx]);
    }
  }

  const long long rows = static_cast<long long>(real_states.size());
  const long long cols = static_cast<long long>(gen_states.size());
  RMat grid(rows, cols);
  parallel_for(rows * cols, [&](long long cell) {
    const long long r = cell / cols, c = cell % cols;
    grid(r, c) = args.metric == "super"
                     ? superfidelity(gen_states[c], real_states[r])
                     : uhlmann_fidelity(gen_states[c], real_states[r]);
  });

  if (!args.dump_dir.empty()) {
    fs::create_directories(args.dump_dir);
    for (long long c = 0; c < cols; ++c)
      save_qdm(join_path(args.dump_dir, "gen_" + std::to_string(c + 1) + ".qdm"), gen_states[c]);
    for (long long r = 0; r < rows; ++r)
      save_qdm(join_path(args.dump_dir, "real_" + std::to_string(r + 1) + ".qdm"),
               real_states[r]);
  }

  std::ofstream os(args.out_csv, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + args.out_csv + " for writing");
  os << "real_id";
  for (long long c = 0; c < cols; ++c) os << ",g" << (c + 1);
  os << '\n';
  char buf[64];
  for (long long r = 0; r < rows; ++r) {
    os << real_ids[r];
    for (long long c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", grid(r, c));
      os << buf;
    }
    os << '\n';
  }
  std::cout << "fidelity grid " << rows << "x" << cols << " (" << args.metric << ") -> "
            << args.out_csv << "\n";
  return 0;
}

int cmd_freq(const FreqArgs& args) {
  // reference fragment from a cohort file or a FASTA record
  std::string reference;
  if (args.reference.ends_with(".json")) {
    reference = genomics::SpikeCohort::load(args.reference).reference;
  } else {
    const auto records = genomics::read_fasta(args.reference);
    reference = records[0].seq;
    if (reference.size() > genomics::kSpikeLength)
      reference = genomics::intercept_spike({records[0].id, records[0].seq}, records[0].seq);
  }
  if (reference.size() != genomics::kSpikeLength)
    fail(ErrorKind::LengthMismatch, "reference does not yield a 3822-long spike fragment");

  std::vector<long long> counts;
  if (args.input.ends_with(".json")) {
    std::ifstream is(args.input);
    if (!is) fail(ErrorKind::Io, "cannot open " + args.input);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const std::exception& e) {
      fail(ErrorKind::Io, std::string("bad variations JSON: ") + e.what());
    }
    counts.assign(genomics::kSpikeLength, 0);
    for (const auto& rec : j)
      for (const int pos : rec.at("positions_3822").get<std::vector<int>>()) {
        if (pos < 1 || pos > genomics::kSpikeLength)
          fail(ErrorKind::LengthMismatch, "variation position outside the spike fragment");
        ++counts[pos - 1];
      }
  } else {
    const auto records = genomics::read_fasta(args.input);
    std::vector<std::string> fragments;
    for (const auto& rec : records) {
      if (rec.seq.size() == genomics::kSpikeLength)
        fragments.push_back(rec.seq);
      else
        fail(ErrorKind::LengthMismatch,
             "freq expects 3822-long fragments, got " + std::to_string(rec.seq.size()));
    }
    counts = genomics::mutation_frequency(fragments, reference);
  }
  genomics::write_frequency_csv(args.out_csv, counts);
  std::cout << "frequency report over " << genomics::kSpikeLength << " positions -> "
            << args.out_csv << "\n";
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hybrid quantum-classical GAN for spike-protein variation structures"};
  app.require_subcommand(1);

  PrepArgs prep;
  auto* prep_cmd = app.add_subcommand("prep", "build a spike cohort from aligned FASTA");
  prep_cmd->add_option("fasta", prep.fasta_paths, "aligned FASTA inputs (reference included)");
  prep_cmd->add_option("--reference-id", prep.reference_id, "record id of the reference row");
  prep_cmd->add_option("--seed", prep.seed, "seed for the random position fill");
  prep_cmd->add_option("--out", prep.out_dir, "output directory")->required();
  prep_cmd->add_option("--synthetic", prep.synthetic,
                       "fabricate a seeded synthetic cohort of this many sequences");

  TrainArgs train;
  std::vector<std::string> raw_overrides;
  auto* train_cmd = app.add_subcommand("train", "run the progressive GAN training loop");
  train_cmd->add_option("--config", train.config_path, "config file (key = value lines)");
  train_cmd->add_option("--set", raw_overrides, "config override key=value")
      ->take_all();
  train_cmd->add_option("--seed", [&](const CLI::results_t& r) {
    train.overrides.emplace_back("seed", r[0]);
    return true;
  }, "seed override");
  train_cmd->add_option("--cohort", [&](const CLI::results_t& r) {
    train.overrides.emplace_back("cohort", r[0]);
    return true;
  }, "cohort override");
  train_cmd->add_option("--out", [&](const CLI::results_t& r) {
    train.overrides.emplace_back("out_dir", r[0]);
    return true;
  }, "output directory override");
  train_cmd->add_option("--steps", [&](const CLI::results_t& r) {
    train.overrides.emplace_back("steps", r[0]);
    return true;
  }, "step count override");
  train_cmd->add_option("--loss", [&](const CLI::results_t& r) {
    train.overrides.emplace_back("loss", r[0]);
    return true;
  }, "loss kind override");

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "decode variation structures from a checkpoint");
  gen_cmd->add_option("--checkpoint", gen.checkpoint)->required();
  gen_cmd->add_option("--cohort", gen.cohort, "cohort file (defaults to the checkpoint config)");
  gen_cmd->add_option("--n", gen.count, "number of structures");
  gen_cmd->add_option("--strain", gen.strain, "delta | omicron");
  gen_cmd->add_option("--k", gen.k, "override the preset mutation count");
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out_dir)->required();

  FidelityArgs fid;
  auto* fid_cmd = app.add_subcommand("fidelity", "fidelity grid between generated and cohort states");
  fid_cmd->add_option("--checkpoint", fid.checkpoint)->required();
  fid_cmd->add_option("--cohort", fid.cohort);
  fid_cmd->add_option("--n-gen", fid.n_gen);
  fid_cmd->add_option("--n-real", fid.n_real);
  fid_cmd->add_option("--metric", fid.metric, "super | uhlmann");
  fid_cmd->add_option("--seed", fid.seed);
  fid_cmd->add_option("--out", fid.out_csv)->required();
  fid_cmd->add_flag("--self", fid.self_grid, "compare generated states with themselves");
  fid_cmd->add_option("--dump-states", fid.dump_dir, "also write the states as QDM1 files");

  FreqArgs freq;
  auto* freq_cmd = app.add_subcommand("freq", "four-section mutation frequency report");
  freq_cmd->add_option("--input", freq.input, "FASTA fragments or variations JSON")->required();
  freq_cmd->add_option("--reference", freq.reference, "reference FASTA or cohort JSON")->required();
  freq_cmd->add_option("--out", freq.out_csv)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (prep_cmd->parsed()) return cmd_prep(prep);
    if (train_cmd->parsed()) {
      for (const std::string& kv : raw_overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
          fail(ErrorKind::BadConfig, "--set expects key=value, got " + kv);
        train.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      }
      return cmd_train(train);
    }
    if (gen_cmd->parsed()) return cmd_generate(gen);
    if (fid_cmd->parsed()) return cmd_fidelity(fid);
    if (freq_cmd->parsed()) return cmd_freq(freq);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::NonFinite ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace qsgan::cli
