#include "qsgan/training.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "qsgan/qlayers.hpp"

namespace qsgan {

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "logistic") return LossKind::Logistic;
  if (s == "relativistic-hinge") return LossKind::RelativisticHinge;
  fail(ErrorKind::BadConfig, "unknown loss kind: " + s);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::pair<double, double> logistic_losses(double d_real, double d_fake) {
  if (!std::isfinite(d_real) || !std::isfinite(d_fake))
    fail(ErrorKind::NonFinite, "non-finite score");
  return {softplus(-d_fake), softplus(d_fake) + softplus(-d_real)};
}

double r_penalty(double grad_real_sqnorm, double grad_fake_sqnorm, double gamma1, double gamma2) {
  if (grad_real_sqnorm < 0 || grad_fake_sqnorm < 0)
    fail(ErrorKind::NegativeNorm, "squared gradient norms must be non-negative");
  return 0.5 * gamma1 * grad_real_sqnorm + 0.5 * gamma2 * grad_fake_sqnorm;
}

std::pair<double, double> relativistic_hinge_losses(const RVec& d_real, const RVec& d_fake) {
  if (d_real.size() == 0 || d_fake.size() == 0) fail(ErrorKind::EmptyBatch, "empty score batch");
  const auto relu = [](double x) { return x > 0 ? x : 0.0; };
  const double mr = d_real.mean();
  const double mf = d_fake.mean();
  double lg = 0, ld = 0;
  for (long long i = 0; i < d_real.size(); ++i) {
    lg += relu(1.0 + d_real[i] - mf);
    ld += relu(1.0 - d_real[i] + mf);
  }
  lg /= d_real.size();
  ld /= d_real.size();
  double lg2 = 0, ld2 = 0;
  for (long long j = 0; j < d_fake.size(); ++j) {
    lg2 += relu(1.0 - d_fake[j] + mr);
    ld2 += relu(1.0 + d_fake[j] - mr);
  }
  return {lg + lg2 / d_fake.size(), ld + ld2 / d_fake.size()};
}

BatchLoss batch_losses(LossKind kind, const RVec& d_real, const RVec& d_fake) {
  if (d_real.size() == 0 || d_fake.size() == 0) fail(ErrorKind::EmptyBatch, "empty score batch");
  if (!d_real.allFinite() || !d_fake.allFinite()) fail(ErrorKind::NonFinite, "non-finite score");
  const long long nr = d_real.size(), nf = d_fake.size();
  BatchLoss out;
  out.g_loss_g_fake = RVec::Zero(nf);
  out.g_loss_d_real = RVec::Zero(nr);
  out.g_loss_d_fake = RVec::Zero(nf);
  if (kind == LossKind::Logistic) {
    for (long long i = 0; i < nr; ++i) {
      out.loss_d += softplus(-d_real[i]) / nr;
      out.g_loss_d_real[i] = -sigmoid(-d_real[i]) / nr;
    }
    for (long long j = 0; j < nf; ++j) {
      out.loss_d += softplus(d_fake[j]) / nf;
      out.g_loss_d_fake[j] = sigmoid(d_fake[j]) / nf;
      out.loss_g += softplus(-d_fake[j]) / nf;
      out.g_loss_g_fake[j] = -sigmoid(-d_fake[j]) / nf;
    }
    return out;
  }
  const auto relu = [](double x) { return x > 0 ? x : 0.0; };
  const auto step = [](double x) { return x > 0 ? 1.0 : 0.0; };
  const double mr = d_real.mean();
  const double mf = d_fake.mean();
  double sum_step_g_rf = 0;  // relu'(1 + diff_rf)
  double sum_step_d_rf = 0;  // relu'(1 - diff_rf)
  for (long long i = 0; i < nr; ++i) {
    const double rf = d_real[i] - mf;
    out.loss_g += relu(1.0 + rf) / nr;
    out.loss_d += relu(1.0 - rf) / nr;
    sum_step_g_rf += step(1.0 + rf);
    sum_step_d_rf += step(1.0 - rf);
    out.g_loss_d_real[i] += -step(1.0 - rf) / nr;
  }
  double sum_step_d_fr = 0;  // relu'(1 + diff_fr)
  for (long long j = 0; j < nf; ++j) {
    const double fr = d_fake[j] - mr;
    out.loss_g += relu(1.0 - fr) / nf;
    out.loss_d += relu(1.0 + fr) / nf;
    out.g_loss_g_fake[j] += -step(1.0 - fr) / nf;
    out.g_loss_d_fake[j] += step(1.0 + fr) / nf;
    sum_step_d_fr += step(1.0 + fr);
  }
  // mean-score coupling terms
  for (long long j = 0; j < nf; ++j) {
    out.g_loss_g_fake[j] += -sum_step_g_rf / (nr * nf);
    out.g_loss_d_fake[j] += sum_step_d_rf / (nr * nf);
  }
  for (long long i = 0; i < nr; ++i) out.g_loss_d_real[i] += -sum_step_d_fr / (nr * nf);
  return out;
}

void AdamOpt::ensure(long long n) {
  if (m.size() != n) {
    m = RVec::Zero(n);
    v = RVec::Zero(n);
  }
}

void AdamOpt::step(RVec& params, const RVec& grads) {
  ensure(params.size());
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (long long i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void AdamOpt::step_visit(const std::function<void(const ParamVisitor&)>& visit_all) {
  long long total = 0;
  visit_all([&](double*, double*, long long n) { total += n; });
  ensure(total);
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  long long off = 0;
  visit_all([&](double* p, double* g, long long n) {
    for (long long i = 0; i < n; ++i) {
      m[off + i] = beta1 * m[off + i] + (1.0 - beta1) * g[i];
      v[off + i] = beta2 * v[off + i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[off + i] / c1) / (std::sqrt(v[off + i] / c2) + eps);
    }
    off += n;
  });
}

std::pair<int, double> progressive_schedule(long long step, const ScheduleConfig& cfg) {
  if (cfg.max_depth <= 1 || step < cfg.stab_steps) return {1, 1.0};
  const long long t = step - cfg.stab_steps;
  const long long window = static_cast<long long>(cfg.fade_steps) + cfg.stab_steps;
  const long long stage = t / window;
  if (stage >= cfg.max_depth - 1) return {cfg.max_depth, 1.0};
  const long long u = t % window;
  const double alpha =
      u < cfg.fade_steps ? static_cast<double>(u) / cfg.fade_steps : 1.0;
  return {static_cast<int>(stage) + 2, alpha};
}

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  os << "step,loss_g,loss_d,depth,alpha\n";
  char buf[160];
  for (const LossRecord& r : records) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%d,%.17g\n", r.step, r.loss_g, r.loss_d,
                  r.depth, r.alpha);
    os << buf;
  }
}

// --- trainer ---

Trainer::Trainer(const RunConfig& config) : cfg(config) {
  cfg.validate();
  Rng init(cfg.seed);
  GeneratorConfig gc;
  gc.latent_dim = cfg.latent_dim;
  gc.style_dim = cfg.style_dim;
  gc.channels = cfg.channels;
  gc.max_depth = cfg.max_depth();
  gc.noise = cfg.noise;
  gen = Generator(gc, init);
  qdisc = QuantumDiscriminator(cfg.qubit_max, init);
  cdisc = ClassicalDiscriminator(cfg.max_depth(), cfg.channels, init);
  opt_g.lr = cfg.learning_rate;
  opt_d.lr = cfg.learning_rate;
  rng = Rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
}

std::pair<int, double> Trainer::schedule_at(long long step) const {
  ScheduleConfig sc{cfg.fade_steps, cfg.stab_steps, cfg.max_depth()};
  return progressive_schedule(step, sc);
}

std::vector<RVec> Trainer::sample_batch(const std::vector<RVec>& cohort_vectors) {
  if (cohort_vectors.empty()) fail(ErrorKind::EmptyBatch, "empty cohort");
  std::vector<RVec> batch;
  batch.reserve(cfg.batch_size);
  for (int i = 0; i < cfg.batch_size; ++i)
    batch.push_back(cohort_vectors[rng.below(cohort_vectors.size())]);
  return batch;
}

DensityMatrix Trainer::encode_generated(const RMat& map) const {
  return encode_feature_map_cached(map, nullptr, /*fallback=*/true);
}

DensityMatrix Trainer::real_state(const RVec& v, int depth) const {
  // low qubits carry the fine locus detail; tracing them is the quantum
  // counterpart of the classical pooled downscale
  return encode_vector_traced(v, 2 * depth);
}

RMat Trainer::real_map(const RVec& v, int depth) const {
  const double norm = v.norm();
  if (norm == 0.0) fail(ErrorKind::ZeroVector, "all-zero mutation vector");
  const RVec u = v / norm;
  RMat m = u * u.transpose();
  const long long target = 1LL << (2 * depth);
  while (m.rows() > target) m = avgpool4(m);
  return m;
}

namespace {

bool visited_grads_finite(const std::function<void(const ParamVisitor&)>& visit_all) {
  bool ok = true;
  visit_all([&](double*, double* g, long long n) {
    for (long long i = 0; i < n; ++i)
      if (!std::isfinite(g[i])) ok = false;
  });
  return ok;
}

RMat diag_to_map(const RVec& d) {
  RMat m = RMat::Zero(d.size(), d.size());
  m.diagonal() = d;
  return m;
}

}  // namespace

LossRecord Trainer::train_step(const std::vector<RVec>& real_batch) {
  if (real_batch.empty()) fail(ErrorKind::EmptyBatch, "empty real batch");
  const auto [depth, alpha] = schedule_at(step_count);
  const int batch = static_cast<int>(real_batch.size());
  const LossKind kind = loss_kind_from_string(cfg.loss);
  const std::string rng_snapshot = rng.save_state();
  const bool use_penalty = !quantum() && (cfg.gamma1 > 0 || cfg.gamma2 > 0);

  // discriminator parameters are updated mid-step; keep a restore point so a
  // failed generator phase leaves the whole state untouched
  RVec qparams_save = qdisc.params;
  std::vector<double> cparams_save;
  cdisc.visit_params([&](double* p, double*, long long n) {
    cparams_save.insert(cparams_save.end(), p, p + n);
  });
  const AdamOpt opt_d_save = opt_d;

  auto restore = [&]() {
    rng.load_state(rng_snapshot);
    qdisc.params = qparams_save;
    long long off = 0;
    cdisc.visit_params([&](double* p, double*, long long n) {
      std::memcpy(p, cparams_save.data() + off, n * sizeof(double));
      off += n;
    });
    opt_d = opt_d_save;
  };

  LossRecord rec;
  rec.step = step_count;
  rec.depth = depth;
  rec.alpha = alpha;

  try {
    // --- discriminator phase ---
    std::vector<RVec> latents(batch);
    std::vector<NoiseFields> noise(batch);
    for (int i = 0; i < batch; ++i) {
      latents[i] = RVec(cfg.latent_dim);
      for (int k = 0; k < cfg.latent_dim; ++k) latents[i][k] = rng.normal();
      if (cfg.noise) noise[i] = gen.sample_noise(depth, rng);
    }

    RVec sr(batch), sf(batch);
    if (quantum()) {
      std::vector<DiscCache> cache_r(batch), cache_f(batch);
      std::vector<DensityMatrix> rho_r(batch), rho_f(batch);
      for (int i = 0; i < batch; ++i) {
        rho_r[i] = real_state(real_batch[i], depth);
        const RVec w = gen.map_latent(latents[i]);
        const RMat map = gen.synthesize(w, depth, alpha, cfg.noise ? &noise[i] : nullptr);
        rho_f[i] = encode_generated(map);
        sr[i] = qdisc.discriminate(rho_r[i], depth, alpha, &cache_r[i]);
        sf[i] = qdisc.discriminate(rho_f[i], depth, alpha, &cache_f[i]);
      }
      const BatchLoss bl = batch_losses(kind, sr, sf);
      rec.loss_d = bl.loss_d;
      RVec gd = RVec::Zero(qdisc.param_count());
      for (int i = 0; i < batch; ++i) qdisc.backward(cache_r[i], bl.g_loss_d_real[i], gd);
      for (int i = 0; i < batch; ++i) qdisc.backward(cache_f[i], bl.g_loss_d_fake[i], gd);
      if (!std::isfinite(rec.loss_d) || !gd.allFinite())
        fail(ErrorKind::NonFinite, "non-finite discriminator loss or gradient");
      opt_d.step(qdisc.params, gd);
    } else {
      std::vector<ClassicalCache> cache_r(batch), cache_f(batch);
      std::vector<RMat> map_r(batch), map_f(batch);
      for (int i = 0; i < batch; ++i) {
        map_r[i] = real_map(real_batch[i], depth);
        const RVec w = gen.map_latent(latents[i]);
        map_f[i] = gen.synthesize(w, depth, alpha, cfg.noise ? &noise[i] : nullptr);
        sr[i] = cdisc.discriminate(map_r[i], depth, alpha, &cache_r[i]);
        sf[i] = cdisc.discriminate(map_f[i], depth, alpha, &cache_f[i]);
      }
      const BatchLoss bl = batch_losses(kind, sr, sf);
      rec.loss_d = bl.loss_d;

      std::vector<RMat> u_real(batch), u_fake(batch);
      double penalty_value = 0.0;
      if (use_penalty) {
        cdisc.zero_grads();
        for (int i = 0; i < batch; ++i) {
          double sq_real = 0, sq_fake = 0;
          u_real[i] = cdisc.backward(cache_r[i], 1.0);
          sq_real = u_real[i].squaredNorm();
          if (cfg.gamma2 > 0) {
            u_fake[i] = cdisc.backward(cache_f[i], 1.0);
            sq_fake = u_fake[i].squaredNorm();
          }
          penalty_value += r_penalty(sq_real, sq_fake, cfg.gamma1, cfg.gamma2) / batch;
        }
        rec.loss_d += penalty_value;
      }

      cdisc.zero_grads();
      for (int i = 0; i < batch; ++i) cdisc.backward(cache_r[i], bl.g_loss_d_real[i]);
      for (int i = 0; i < batch; ++i) cdisc.backward(cache_f[i], bl.g_loss_d_fake[i]);

      if (use_penalty) {
        // central-difference Hessian-vector products for the penalty term
        const double h = 1e-4;
        auto add_penalty_grads = [&](const RMat& x, const RMat& u, double gamma) {
          const double norm = std::sqrt(u.squaredNorm());
          if (norm == 0.0 || gamma == 0.0) return;
          const RMat dir = u / norm;
          ClassicalCache c;
          cdisc.discriminate(x + h * dir, depth, alpha, &c);
          cdisc.backward(c, gamma * norm / (2 * h * batch));
          cdisc.discriminate(x - h * dir, depth, alpha, &c);
          cdisc.backward(c, -gamma * norm / (2 * h * batch));
        };
        for (int i = 0; i < batch; ++i) {
          add_penalty_grads(map_r[i], u_real[i], cfg.gamma1);
          if (cfg.gamma2 > 0) add_penalty_grads(map_f[i], u_fake[i], cfg.gamma2);
        }
      }

      if (!std::isfinite(rec.loss_d) ||
          !visited_grads_finite([&](const ParamVisitor& fn) { cdisc.visit_params(fn); }))
        fail(ErrorKind::NonFinite, "non-finite discriminator loss or gradient");
      opt_d.step_visit([&](const ParamVisitor& fn) { cdisc.visit_params(fn); });
    }

    // --- generator phase ---
    std::vector<RVec> latents2(batch);
    std::vector<NoiseFields> noise2(batch);
    for (int i = 0; i < batch; ++i) {
      latents2[i] = RVec(cfg.latent_dim);
      for (int k = 0; k < cfg.latent_dim; ++k) latents2[i][k] = rng.normal();
      if (cfg.noise) noise2[i] = gen.sample_noise(depth, rng);
    }

    RVec sr2(batch), sf2(batch);
    gen.zero_grads();
    if (quantum()) {
      for (int i = 0; i < batch; ++i)
        sr2[i] = qdisc.discriminate(real_state(real_batch[i], depth), depth, alpha);
      std::vector<MapCache> mcache(batch);
      std::vector<SynthCache> scache(batch);
      std::vector<EncodeCache> ecache(batch);
      std::vector<DiscCache> dcache(batch);
      for (int i = 0; i < batch; ++i) {
        const RVec w = gen.map_latent_cached(latents2[i], mcache[i]);
        const RMat map = gen.synthesize(w, depth, alpha, cfg.noise ? &noise2[i] : nullptr,
                                        &scache[i]);
        const DensityMatrix rho = encode_feature_map_cached(map, &ecache[i], /*fallback=*/true);
        sf2[i] = qdisc.discriminate(rho, depth, alpha, &dcache[i]);
      }
      const BatchLoss bl = batch_losses(kind, sr2, sf2);
      rec.loss_g = bl.loss_g;
      RVec scratch = RVec::Zero(qdisc.param_count());
      for (int i = 0; i < batch; ++i) {
        const CMat g_state = qdisc.backward(dcache[i], bl.g_loss_g_fake[i], scratch);
        const RVec g_diag = encode_feature_map_backward(ecache[i], g_state);
        const std::vector<RVec> g_styles = gen.synthesize_backward(scache[i], diag_to_map(g_diag));
        RVec g_w = RVec::Zero(cfg.style_dim);
        for (const RVec& gs : g_styles) g_w += gs;
        gen.map_backward(mcache[i], g_w);
      }
    } else {
      for (int i = 0; i < batch; ++i)
        sr2[i] = cdisc.discriminate(real_map(real_batch[i], depth), depth, alpha);
      std::vector<MapCache> mcache(batch);
      std::vector<SynthCache> scache(batch);
      std::vector<ClassicalCache> dcache(batch);
      cdisc.zero_grads();
      for (int i = 0; i < batch; ++i) {
        const RVec w = gen.map_latent_cached(latents2[i], mcache[i]);
        const RMat map = gen.synthesize(w, depth, alpha, cfg.noise ? &noise2[i] : nullptr,
                                        &scache[i]);
        sf2[i] = cdisc.discriminate(map, depth, alpha, &dcache[i]);
      }
      const BatchLoss bl = batch_losses(kind, sr2, sf2);
      rec.loss_g = bl.loss_g;
      for (int i = 0; i < batch; ++i) {
        const RMat g_map = cdisc.backward(dcache[i], bl.g_loss_g_fake[i]);
        const std::vector<RVec> g_styles = gen.synthesize_backward(scache[i], g_map);
        RVec g_w = RVec::Zero(cfg.style_dim);
        for (const RVec& gs : g_styles) g_w += gs;
        gen.map_backward(mcache[i], g_w);
      }
    }
    if (!std::isfinite(rec.loss_g) ||
        !visited_grads_finite([&](const ParamVisitor& fn) { gen.visit_params(fn); }))
      fail(ErrorKind::NonFinite, "non-finite generator loss or gradient");
    opt_g.step_visit([&](const ParamVisitor& fn) { gen.visit_params(fn); });
  } catch (...) {
    restore();
    throw;
  }

  ++step_count;
  return rec;
}

// --- checkpoint io ---

namespace {

void put_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void put_u32(std::ostream& os, std::uint32_t v) { put_bytes(os, &v, 4); }
void put_u64(std::ostream& os, std::uint64_t v) { put_bytes(os, &v, 8); }
void put_f64(std::ostream& os, double v) { put_bytes(os, &v, 8); }

void put_vec(std::ostream& os, const RVec& v) {
  put_u64(os, static_cast<std::uint64_t>(v.size()));
  put_bytes(os, v.data(), static_cast<size_t>(v.size()) * 8);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

RVec get_vec(std::istream& is) {
  const std::uint64_t n = get_u64(is);
  RVec v(static_cast<long long>(n));
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * 8));
  return v;
}

RVec collect_params(const std::function<void(const ParamVisitor&)>& visit_all) {
  std::vector<double> flat;
  visit_all([&](double* p, double*, long long n) { flat.insert(flat.end(), p, p + n); });
  return Eigen::Map<RVec>(flat.data(), static_cast<long long>(flat.size()));
}

void scatter_params(const std::function<void(const ParamVisitor&)>& visit_all, const RVec& flat) {
  long long off = 0;
  visit_all([&](double* p, double*, long long n) {
    if (off + n > flat.size()) fail(ErrorKind::BadCheckpoint, "parameter blob too short");
    std::memcpy(p, flat.data() + off, static_cast<size_t>(n) * 8);
    off += n;
  });
  if (off != flat.size()) fail(ErrorKind::BadCheckpoint, "parameter blob size mismatch");
}

void put_adam(std::ostream& os, const AdamOpt& a) {
  put_u64(os, static_cast<std::uint64_t>(a.t));
  put_vec(os, a.m);
  put_vec(os, a.v);
}

void get_adam(std::istream& is, AdamOpt& a) {
  a.t = static_cast<long long>(get_u64(is));
  a.m = get_vec(is);
  a.v = get_vec(is);
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  os.write("QGAN", 4);
  put_u32(os, 1);
  put_u64(os, config_digest(cfg));
  const std::string conf = config_to_string(cfg);
  put_u32(os, static_cast<std::uint32_t>(conf.size()));
  put_bytes(os, conf.data(), conf.size());

  Trainer& self = const_cast<Trainer&>(*this);
  put_vec(os, collect_params([&](const ParamVisitor& fn) { self.gen.visit_params(fn); }));
  put_vec(os, qdisc.params);
  put_vec(os, collect_params([&](const ParamVisitor& fn) { self.cdisc.visit_params(fn); }));
  put_adam(os, opt_g);
  put_adam(os, opt_d);
  put_u64(os, static_cast<std::uint64_t>(step_count));
  const auto [depth, alpha] = schedule_at(step_count);
  put_u32(os, static_cast<std::uint32_t>(depth));
  put_f64(os, alpha);
  const std::string rs = rng.save_state();
  put_u32(os, static_cast<std::uint32_t>(rs.size()));
  put_bytes(os, rs.data(), rs.size());
  if (!os) fail(ErrorKind::Io, "write failed for " + path);
}

Trainer Trainer::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "QGAN", 4) != 0)
    fail(ErrorKind::BadCheckpoint, "bad checkpoint magic in " + path);
  const std::uint32_t version = get_u32(is);
  if (version != 1) fail(ErrorKind::BadCheckpoint, "unsupported checkpoint version");
  const std::uint64_t digest = get_u64(is);
  const std::uint32_t conf_len = get_u32(is);
  std::string conf(conf_len, '\0');
  is.read(conf.data(), conf_len);
  if (!is) fail(ErrorKind::BadCheckpoint, "truncated checkpoint");

  const RunConfig cfg = parse_config_text(conf);
  if (config_digest(cfg) != digest) fail(ErrorKind::BadCheckpoint, "config digest mismatch");

  Trainer t(cfg);
  const RVec gen_params = get_vec(is);
  scatter_params([&](const ParamVisitor& fn) { t.gen.visit_params(fn); }, gen_params);
  const RVec qparams = get_vec(is);
  if (qparams.size() != t.qdisc.params.size())
    fail(ErrorKind::BadCheckpoint, "quantum parameter count mismatch");
  t.qdisc.params = qparams;
  scatter_params([&](const ParamVisitor& fn) { t.cdisc.visit_params(fn); }, get_vec(is));
  get_adam(is, t.opt_g);
  get_adam(is, t.opt_d);
  t.step_count = static_cast<long long>(get_u64(is));
  (void)get_u32(is);  // stored depth (derivable from the step)
  (void)get_f64(is);  // stored alpha
  const std::uint32_t rs_len = get_u32(is);
  std::string rs(rs_len, '\0');
  is.read(rs.data(), rs_len);
  if (!is) fail(ErrorKind::BadCheckpoint, "truncated checkpoint");
  t.rng.load_state(rs);
  return t;
}

}  // namespace qsgan
