#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qsgan/config.hpp"
#include "qsgan/discriminator.hpp"
#include "qsgan/generator.hpp"

namespace qsgan {

enum class LossKind { Logistic, RelativisticHinge };
LossKind loss_kind_from_string(const std::string& s);

// non-saturated logistic pair: (log(e^-df + 1), log(e^df + 1) + log(e^-dr + 1))
std::pair<double, double> logistic_losses(double d_real, double d_fake);

// (gamma1/2) * |grad_real|^2 + (gamma2/2) * |grad_fake|^2
double r_penalty(double grad_real_sqnorm, double grad_fake_sqnorm, double gamma1, double gamma2);

std::pair<double, double> relativistic_hinge_losses(const RVec& d_real, const RVec& d_fake);

double softplus(double x);
double sigmoid(double x);

// batch losses plus their gradients w.r.t. the raw scores
struct BatchLoss {
  double loss_g = 0.0;
  double loss_d = 0.0;
  RVec g_loss_g_fake;  // d(loss_g)/d(fake scores)
  RVec g_loss_d_real;
  RVec g_loss_d_fake;
};
BatchLoss batch_losses(LossKind kind, const RVec& d_real, const RVec& d_fake);

struct AdamOpt {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  RVec m, v;
  long long t = 0;

  void ensure(long long n);
  void step(RVec& params, const RVec& grads);
  // walks visit-based parameter owners in their fixed order
  void step_visit(const std::function<void(const ParamVisitor&)>& visit_all);
};

struct ScheduleConfig {
  int fade_steps = 100;
  int stab_steps = 100;
  int max_depth = 5;
};

// depth 1 stabilizes first; every later depth fades in linearly over
// fade_steps and then stabilizes for stab_steps
std::pair<int, double> progressive_schedule(long long step, const ScheduleConfig& cfg);

struct LossRecord {
  long long step = 0;
  double loss_g = 0.0;
  double loss_d = 0.0;
  int depth = 1;
  double alpha = 1.0;
};

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& records);

// Owns the generator, the active discriminator, both optimizers and the run
// RNG. A training step aborts on any non-finite value with the state left
// untouched.
struct Trainer {
  RunConfig cfg;
  Generator gen;
  QuantumDiscriminator qdisc;
  ClassicalDiscriminator cdisc;
  AdamOpt opt_g, opt_d;
  Rng rng{0};
  long long step_count = 0;

  Trainer() = default;
  explicit Trainer(const RunConfig& cfg);

  bool quantum() const { return cfg.discriminator == "quantum"; }
  std::pair<int, double> schedule_at(long long step) const;

  // seeded uniform batch (with replacement) of cohort mutation vectors
  std::vector<RVec> sample_batch(const std::vector<RVec>& cohort_vectors);

  // one discriminator update followed by one generator update
  LossRecord train_step(const std::vector<RVec>& real_batch);

  // encoding used for generated maps inside the pipeline: degenerate
  // diagonals fall back to the maximally mixed state, as in the blur layer
  DensityMatrix encode_generated(const RMat& map) const;
  // real vector encoded at 10 qubits and partial-traced to the active size
  DensityMatrix real_state(const RVec& v, int depth) const;
  // classical path: outer-product map average-pooled to the active side
  RMat real_map(const RVec& v, int depth) const;

  void save_checkpoint(const std::string& path) const;
  static Trainer load_checkpoint(const std::string& path);
};

}  // namespace qsgan
