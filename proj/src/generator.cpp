#include "qsgan/generator.hpp"

#include <cmath>

namespace qsgan {

namespace {

constexpr double kLreluSlope = 0.2;
constexpr double kNormEps = 1e-8;

double lrelu(double x) { return x > 0 ? x : kLreluSlope * x; }
double lrelu_grad(double x) { return x > 0 ? 1.0 : kLreluSlope; }

Tensor upsample4(const Tensor& x) {
  Tensor y(x.ch, x.h * 4, x.w * 4);
  for (int c = 0; c < x.ch; ++c)
    for (int yo = 0; yo < y.h; ++yo)
      for (int xo = 0; xo < y.w; ++xo) y.at(c, yo, xo) = x.at(c, yo / 4, xo / 4);
  return y;
}

Tensor downsample4_adjoint(const Tensor& g) {
  Tensor out(g.ch, g.h / 4, g.w / 4);
  for (int c = 0; c < g.ch; ++c)
    for (int yo = 0; yo < g.h; ++yo)
      for (int xo = 0; xo < g.w; ++xo) out.at(c, yo / 4, xo / 4) += g.at(c, yo, xo);
  return out;
}

RMat upsample4_map(const RMat& m) {
  RMat y(m.rows() * 4, m.cols() * 4);
  for (long long r = 0; r < y.rows(); ++r)
    for (long long c = 0; c < y.cols(); ++c) y(r, c) = m(r / 4, c / 4);
  return y;
}

RMat downsample4_map_adjoint(const RMat& g) {
  RMat out = RMat::Zero(g.rows() / 4, g.cols() / 4);
  for (long long r = 0; r < g.rows(); ++r)
    for (long long c = 0; c < g.cols(); ++c) out(r / 4, c / 4) += g(r, c);
  return out;
}

}  // namespace

// --- FcLayer ---

void FcLayer::init(int out, int in, double gain, Rng& rng) {
  w.resize(out, in);
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < in; ++j) w(i, j) = rng.normal();
  b = RVec::Zero(out);
  gw = RMat::Zero(out, in);
  gb = RVec::Zero(out);
  scale = gain / std::sqrt(static_cast<double>(in));
}

RVec FcLayer::forward(const RVec& x) const { return scale * (w * x) + b; }

RVec FcLayer::backward(const RVec& x_in, const RVec& g_out) {
  gw.noalias() += scale * g_out * x_in.transpose();
  gb += g_out;
  return scale * (w.transpose() * g_out);
}

void FcLayer::visit(const ParamVisitor& fn) {
  fn(w.data(), gw.data(), w.size());
  fn(b.data(), gb.data(), b.size());
}

// --- Conv3x3 ---

void Conv3x3::init(int cout_, int cin_, double gain, Rng& rng) {
  cin = cin_;
  cout = cout_;
  w.resize(cout, cin * 9);
  for (int i = 0; i < cout; ++i)
    for (int j = 0; j < cin * 9; ++j) w(i, j) = rng.normal();
  b = RVec::Zero(cout);
  gw = RMat::Zero(cout, cin * 9);
  gb = RVec::Zero(cout);
  scale = gain / std::sqrt(static_cast<double>(cin) * 9.0);
}

Tensor Conv3x3::forward(const Tensor& x) const {
  Tensor y(cout, x.h, x.w);
  const int h = x.h, wdt = x.w;
  for (int co = 0; co < cout; ++co) {
    double* out = y.plane(co);
    for (long long i = 0; i < y.plane_size(); ++i) out[i] = b[co];
    for (int ci = 0; ci < cin; ++ci) {
      const double* src = x.plane(ci);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double wv = scale * w(co, ci * 9 + (dy + 1) * 3 + (dx + 1));
          if (wv == 0.0) continue;
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(wdt, wdt - dx);
          for (int yo = y0; yo < y1; ++yo) {
            double* dst = out + static_cast<long long>(yo) * wdt;
            const double* in = src + static_cast<long long>(yo + dy) * wdt + dx;
            for (int xo = x0; xo < x1; ++xo) dst[xo] += wv * in[xo];
          }
        }
    }
  }
  return y;
}

Tensor Conv3x3::backward(const Tensor& x_in, const Tensor& g_out) {
  Tensor g_in(cin, x_in.h, x_in.w);
  const int h = x_in.h, wdt = x_in.w;
  for (int co = 0; co < cout; ++co) {
    const double* g = g_out.plane(co);
    double bsum = 0;
    for (long long i = 0; i < g_out.plane_size(); ++i) bsum += g[i];
    gb[co] += bsum;
    for (int ci = 0; ci < cin; ++ci) {
      const double* src = x_in.plane(ci);
      double* gi = g_in.plane(ci);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
          const int x0 = std::max(0, -dx), x1 = std::min(wdt, wdt - dx);
          double wsum = 0;
          const double wv = scale * w(co, ci * 9 + (dy + 1) * 3 + (dx + 1));
          for (int yo = y0; yo < y1; ++yo) {
            const double* grow = g + static_cast<long long>(yo) * wdt;
            const double* in = src + static_cast<long long>(yo + dy) * wdt + dx;
            double* girow = gi + static_cast<long long>(yo + dy) * wdt + dx;
            for (int xo = x0; xo < x1; ++xo) {
              wsum += grow[xo] * in[xo];
              girow[xo] += wv * grow[xo];
            }
          }
          gw(co, ci * 9 + (dy + 1) * 3 + (dx + 1)) += scale * wsum;
        }
    }
  }
  return g_in;
}

void Conv3x3::visit(const ParamVisitor& fn) {
  fn(w.data(), gw.data(), w.size());
  fn(b.data(), gb.data(), b.size());
}

void SynthBlock::visit(const ParamVisitor& fn) {
  conv1.visit(fn);
  fn(noise1_w.data(), noise1_gw.data(), noise1_w.size());
  style1.visit(fn);
  conv2.visit(fn);
  fn(noise2_w.data(), noise2_gw.data(), noise2_w.size());
  style2.visit(fn);
  fn(tomap_w.data(), tomap_gw.data(), tomap_w.size());
  fn(&tomap_b, &tomap_gb, 1);
}

// --- Generator ---

Generator::Generator(const GeneratorConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.latent_dim < 1 || cfg.style_dim < 1 || cfg.channels < 1 || cfg.max_depth < 1)
    fail(ErrorKind::BadConfig, "generator dimensions must be positive");
  mapping.resize(8);
  mapping[0].init(cfg.style_dim, cfg.latent_dim, std::sqrt(2.0), rng);
  for (int i = 1; i < 8; ++i) mapping[i].init(cfg.style_dim, cfg.style_dim, std::sqrt(2.0), rng);

  constant = Tensor(cfg.channels, 4, 4);
  constant.data.setOnes();
  constant_g = Tensor(cfg.channels, 4, 4);

  blocks.resize(cfg.max_depth);
  for (auto& blk : blocks) {
    blk.conv1.init(cfg.channels, cfg.channels, std::sqrt(2.0), rng);
    blk.noise1_w = RVec::Zero(cfg.channels);
    blk.noise1_gw = RVec::Zero(cfg.channels);
    blk.style1.init(2 * cfg.channels, cfg.style_dim, 1.0, rng);
    blk.style1.b.head(cfg.channels).setOnes();
    blk.conv2.init(cfg.channels, cfg.channels, std::sqrt(2.0), rng);
    blk.noise2_w = RVec::Zero(cfg.channels);
    blk.noise2_gw = RVec::Zero(cfg.channels);
    blk.style2.init(2 * cfg.channels, cfg.style_dim, 1.0, rng);
    blk.style2.b.head(cfg.channels).setOnes();
    blk.tomap_w.resize(cfg.channels);
    for (int c = 0; c < cfg.channels; ++c) blk.tomap_w[c] = rng.normal();
    blk.tomap_gw = RVec::Zero(cfg.channels);
    blk.tomap_scale = 1.0 / std::sqrt(static_cast<double>(cfg.channels));
  }
}

RVec Generator::map_latent(const RVec& z) const {
  MapCache scratch;
  return map_latent_cached(z, scratch);
}

RVec Generator::map_latent_cached(const RVec& z, MapCache& cache) const {
  if (z.size() != cfg_.latent_dim) fail(ErrorKind::DimMismatch, "latent dimension mismatch");
  if (!z.allFinite()) fail(ErrorKind::NonFinite, "non-finite latent");
  cache.z = z;
  cache.inputs.clear();
  cache.pre_acts.clear();
  RVec x = z;
  for (const FcLayer& fc : mapping) {
    cache.inputs.push_back(x);
    RVec pre = fc.forward(x);
    cache.pre_acts.push_back(pre);
    x = pre.unaryExpr([](double v) { return lrelu(v); });
  }
  return x;
}

RVec Generator::map_backward(const MapCache& cache, const RVec& g_w) {
  RVec g = g_w;
  for (int i = 7; i >= 0; --i) {
    RVec g_pre = g.cwiseProduct(cache.pre_acts[i].unaryExpr([](double v) { return lrelu_grad(v); }));
    g = mapping[i].backward(cache.inputs[i], g_pre);
  }
  return g;
}

namespace {

struct AdainResult {
  Tensor out;
};

}  // namespace

// conv -> noise -> leaky rectifier -> AdaIN for one layer of one block
static Tensor run_layer(const Conv3x3& conv, const RVec& noise_w, const FcLayer& style,
                        const Tensor& x, const RVec& w_style, const RMat* noise_plane,
                        SynthLayerCache* cache) {
  Tensor pre = conv.forward(x);
  const int ch = pre.ch;
  if (noise_plane && noise_plane->size() > 0) {
    for (int c = 0; c < ch; ++c) {
      double* p = pre.plane(c);
      const double* n = noise_plane->data();
      const double nw = noise_w[c];
      for (long long i = 0; i < pre.plane_size(); ++i) p[i] += nw * n[i];
    }
  }
  const RVec s = style.forward(w_style);
  const RVec ys = s.head(ch);
  const RVec yb = s.tail(ch);
  RVec mu(ch), sigma(ch);
  Tensor out(ch, pre.h, pre.w);
  const double n_pix = static_cast<double>(pre.plane_size());
  for (int c = 0; c < ch; ++c) {
    const double* p = pre.plane(c);
    double m = 0;
    for (long long i = 0; i < pre.plane_size(); ++i) m += lrelu(p[i]);
    m /= n_pix;
    double var = 0;
    for (long long i = 0; i < pre.plane_size(); ++i) {
      const double d = lrelu(p[i]) - m;
      var += d * d;
    }
    var /= n_pix;
    const double sd = std::sqrt(var + kNormEps);
    mu[c] = m;
    sigma[c] = sd;
    double* o = out.plane(c);
    for (long long i = 0; i < pre.plane_size(); ++i)
      o[i] = ys[c] * ((lrelu(p[i]) - m) / sd) + yb[c];
  }
  if (cache) {
    cache->x_in = x;
    cache->pre_act = std::move(pre);
    cache->noise = (noise_plane && noise_plane->size() > 0) ? *noise_plane : RMat();
    cache->mu = mu;
    cache->sigma = sigma;
    cache->ys = ys;
    cache->yb = yb;
  }
  return out;
}

static RMat run_tomap(const SynthBlock& blk, const Tensor& x) {
  RMat m = RMat::Constant(x.h, x.w, blk.tomap_b);
  for (int c = 0; c < x.ch; ++c) {
    const double* p = x.plane(c);
    const double wv = blk.tomap_scale * blk.tomap_w[c];
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) m(y, xx) += wv * p[static_cast<long long>(y) * x.w + xx];
  }
  return m;
}

RMat Generator::synthesize_with_styles(const std::vector<RVec>& styles, int depth, double alpha,
                                       const NoiseFields* noise, SynthCache* cache) const {
  if (depth < 1 || depth > cfg_.max_depth) fail(ErrorKind::BadDepth, "depth out of range");
  if (static_cast<int>(styles.size()) != depth)
    fail(ErrorKind::BadDepth, "need one style per active block");
  if (cache) {
    cache->depth = depth;
    cache->alpha = alpha;
    cache->styles = styles;
    cache->layers.assign(2 * depth, {});
    cache->block_out.assign(depth, {});
  }
  Tensor x = constant;
  std::vector<Tensor> block_out(depth);
  for (int b = 0; b < depth; ++b) {
    if (b > 0) x = upsample4(x);
    const SynthBlock& blk = blocks[b];
    const RMat* n1 = nullptr;
    const RMat* n2 = nullptr;
    if (noise && cfg_.noise) {
      n1 = &(*noise)[2 * b];
      n2 = &(*noise)[2 * b + 1];
    }
    x = run_layer(blk.conv1, blk.noise1_w, blk.style1, x, styles[b], n1,
                  cache ? &cache->layers[2 * b] : nullptr);
    x = run_layer(blk.conv2, blk.noise2_w, blk.style2, x, styles[b], n2,
                  cache ? &cache->layers[2 * b + 1] : nullptr);
    block_out[b] = x;
  }
  RMat out = run_tomap(blocks[depth - 1], block_out[depth - 1]);
  if (depth > 1 && alpha < 1.0) {
    const RMat old_map = upsample4_map(run_tomap(blocks[depth - 2], block_out[depth - 2]));
    out = (1.0 - alpha) * old_map + alpha * out;
  }
  if (cache) cache->block_out = std::move(block_out);
  return out;
}

RMat Generator::synthesize(const RVec& w, int depth, double alpha, const NoiseFields* noise,
                           SynthCache* cache) const {
  return synthesize_with_styles(std::vector<RVec>(depth, w), depth, alpha, noise, cache);
}

std::vector<RVec> Generator::synthesize_backward(const SynthCache& cache, const RMat& g_map) {
  const int depth = cache.depth;
  std::vector<RVec> g_styles(depth, RVec::Zero(cfg_.style_dim));
  std::vector<Tensor> g_block(depth);

  auto tomap_backward = [&](SynthBlock& blk, const Tensor& x, const RMat& g) {
    Tensor gx(x.ch, x.h, x.w);
    for (int c = 0; c < x.ch; ++c) {
      const double* p = x.plane(c);
      double* gp = gx.plane(c);
      double wsum = 0;
      const double wv = blk.tomap_scale * blk.tomap_w[c];
      for (int y = 0; y < x.h; ++y)
        for (int xx = 0; xx < x.w; ++xx) {
          const long long i = static_cast<long long>(y) * x.w + xx;
          wsum += g(y, xx) * p[i];
          gp[i] += wv * g(y, xx);
        }
      blk.tomap_gw[c] += blk.tomap_scale * wsum;
    }
    blk.tomap_gb += g.sum();
    return gx;
  };

  const bool fading = depth > 1 && cache.alpha < 1.0;
  {
    const RMat g_new = fading ? RMat(cache.alpha * g_map) : g_map;
    g_block[depth - 1] = tomap_backward(blocks[depth - 1], cache.block_out[depth - 1], g_new);
    if (fading) {
      const RMat g_old = downsample4_map_adjoint((1.0 - cache.alpha) * g_map);
      g_block[depth - 2] = tomap_backward(blocks[depth - 2], cache.block_out[depth - 2], g_old);
    }
  }

  for (int b = depth - 1; b >= 0; --b) {
    Tensor g = std::move(g_block[b]);
    if (g.empty()) g = Tensor(cfg_.channels, 4 << (2 * b), 4 << (2 * b));
    SynthBlock& blk = blocks[b];
    for (int which = 1; which >= 0; --which) {
      const SynthLayerCache& lc = cache.layers[2 * b + which];
      Conv3x3& conv = which ? blk.conv2 : blk.conv1;
      FcLayer& style = which ? blk.style2 : blk.style1;
      RVec& noise_gw = which ? blk.noise2_gw : blk.noise1_gw;
      const int ch = cfg_.channels;
      const double n_pix = static_cast<double>(lc.pre_act.plane_size());
      Tensor g_pre(ch, lc.pre_act.h, lc.pre_act.w);
      RVec g_ys = RVec::Zero(ch), g_yb = RVec::Zero(ch);
      for (int c = 0; c < ch; ++c) {
        const double* p = lc.pre_act.plane(c);
        const double* gy = g.plane(c);
        double* gp = g_pre.plane(c);
        const double mu = lc.mu[c], sd = lc.sigma[c], ysc = lc.ys[c];
        double sum_gy = 0, sum_gyxh = 0;
        for (long long i = 0; i < lc.pre_act.plane_size(); ++i) {
          const double xh = (lrelu(p[i]) - mu) / sd;
          sum_gy += gy[i];
          sum_gyxh += gy[i] * xh;
        }
        g_yb[c] = sum_gy;
        g_ys[c] = sum_gyxh;
        const double m1 = ysc * sum_gy / n_pix;
        const double m2 = ysc * sum_gyxh / n_pix;
        for (long long i = 0; i < lc.pre_act.plane_size(); ++i) {
          const double xh = (lrelu(p[i]) - mu) / sd;
          const double gxh = ysc * gy[i];
          gp[i] = ((gxh - m1 - xh * m2) / sd) * lrelu_grad(p[i]);
        }
      }
      RVec g_s(2 * ch);
      g_s << g_ys, g_yb;
      g_styles[b] += style.backward(cache.styles[b], g_s);
      if (lc.noise.size() > 0) {
        for (int c = 0; c < ch; ++c) {
          const double* gp = g_pre.plane(c);
          const double* n = lc.noise.data();
          double s = 0;
          for (long long i = 0; i < g_pre.plane_size(); ++i) s += gp[i] * n[i];
          noise_gw[c] += s;
        }
      }
      g = conv.backward(lc.x_in, g_pre);
    }
    if (b > 0) {
      Tensor down = downsample4_adjoint(g);
      if (g_block[b - 1].empty())
        g_block[b - 1] = std::move(down);
      else
        g_block[b - 1].data += down.data;
    } else {
      constant_g.data += g.data;
    }
  }
  return g_styles;
}

NoiseFields Generator::sample_noise(int depth, Rng& rng) const {
  NoiseFields fields;
  for (int b = 0; b < depth; ++b) {
    const long long side = cfg_.side_at(b + 1);
    for (int k = 0; k < 2; ++k) {
      RMat n(side, side);
      for (long long y = 0; y < side; ++y)
        for (long long x = 0; x < side; ++x) n(y, x) = rng.normal();
      fields.push_back(std::move(n));
    }
  }
  return fields;
}

RMat Generator::generate(const RVec& z, int depth, double alpha, Rng* noise_rng,
                         SynthCache* synth_cache, MapCache* map_cache) const {
  MapCache scratch;
  const RVec w = map_latent_cached(z, map_cache ? *map_cache : scratch);
  NoiseFields fields;
  const NoiseFields* fptr = nullptr;
  if (cfg_.noise && noise_rng) {
    fields = sample_noise(depth, *noise_rng);
    fptr = &fields;
  }
  return synthesize(w, depth, alpha, fptr, synth_cache);
}

RMat Generator::style_mix(const RVec& z1, const RVec& z2, int crossover, int depth, double alpha,
                          Rng* noise_rng) const {
  if (crossover < 1 || crossover > depth) fail(ErrorKind::BadDepth, "crossover out of range");
  const RVec w1 = map_latent(z1);
  const RVec w2 = map_latent(z2);
  std::vector<RVec> styles(depth);
  for (int b = 0; b < depth; ++b) styles[b] = (b + 1 < crossover) ? w1 : w2;
  NoiseFields fields;
  const NoiseFields* fptr = nullptr;
  if (cfg_.noise && noise_rng) {
    fields = sample_noise(depth, *noise_rng);
    fptr = &fields;
  }
  return synthesize_with_styles(styles, depth, alpha, fptr, nullptr);
}

void Generator::zero_grads() {
  visit_params([](double*, double* g, long long n) {
    for (long long i = 0; i < n; ++i) g[i] = 0.0;
  });
}

void Generator::visit_params(const ParamVisitor& fn) {
  for (FcLayer& fc : mapping) fc.visit(fn);
  fn(constant.data.data(), constant_g.data.data(), constant.data.size());
  for (SynthBlock& blk : blocks) blk.visit(fn);
}

long long Generator::param_count() {
  long long total = 0;
  visit_params([&](double*, double*, long long n) { total += n; });
  return total;
}

}  // namespace qsgan
