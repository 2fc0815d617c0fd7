#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsgan/generator.hpp"
#include "support.hpp"

using namespace qsgan;

namespace {

GeneratorConfig tiny_config() {
  GeneratorConfig cfg;
  cfg.latent_dim = 6;
  cfg.style_dim = 6;
  cfg.channels = 2;
  cfg.max_depth = 3;
  return cfg;
}

double map_loss(const RMat& map, const RMat& w) { return (map.cwiseProduct(w)).sum(); }

// flatten parameter pointers for finite-difference sweeps
std::vector<double*> param_ptrs(Generator& g) {
  std::vector<double*> ptrs;
  g.visit_params([&](double* v, double*, long long n) {
    for (long long i = 0; i < n; ++i) ptrs.push_back(v + i);
  });
  return ptrs;
}

std::vector<double> grad_values(Generator& g) {
  std::vector<double> out;
  g.visit_params([&](double*, double* gr, long long n) {
    for (long long i = 0; i < n; ++i) out.push_back(gr[i]);
  });
  return out;
}

}  // namespace

TEST_CASE("map_latent zero and identity paths") {
  Rng rng(1);
  Generator g(tiny_config(), rng);

  for (FcLayer& fc : g.mapping) {
    fc.w.setZero();
    fc.b.setZero();
  }
  RVec z(6);
  z << 1, -2, 3, 0.5, -0.1, 2;
  CHECK(g.map_latent(z).isZero(0.0));

  // identity-effective weights: w_stored = I / scale
  for (FcLayer& fc : g.mapping) fc.w = RMat::Identity(6, 6) / fc.scale;
  const RVec w = g.map_latent(z);
  // scripted layer-by-layer oracle
  RVec expect = z;
  for (int layer = 0; layer < 8; ++layer)
    expect = expect.unaryExpr([](double v) { return v > 0 ? v : 0.2 * v; });
  CHECK((w - expect).cwiseAbs().maxCoeff() < 1e-12);

  RVec bad = z;
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(g.map_latent(bad), Error);
}

TEST_CASE("mapping gradient w.r.t. z matches finite differences") {
  Rng rng(2);
  Generator g(tiny_config(), rng);
  RVec z(6);
  for (int i = 0; i < 6; ++i) z[i] = rng.normal();
  RVec probe(6);
  for (int i = 0; i < 6; ++i) probe[i] = rng.normal();

  MapCache cache;
  g.map_latent_cached(z, cache);
  g.zero_grads();
  const RVec g_z = g.map_backward(cache, probe);

  auto loss = [&](const RVec& zz) { return probe.dot(g.map_latent(zz)); };
  const RVec fd = oracle::finite_diff_grads(loss, z, 1e-6);
  CHECK((g_z - fd).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("synthesize shapes and progressive blending") {
  Rng rng(3);
  Generator g(tiny_config(), rng);
  RVec z(6);
  for (int i = 0; i < 6; ++i) z[i] = rng.normal();
  const RVec w = g.map_latent(z);

  for (int depth = 1; depth <= 3; ++depth) {
    const RMat m = g.synthesize(w, depth, 1.0);
    CHECK(m.rows() == (1LL << (2 * depth)));
    CHECK(m.cols() == (1LL << (2 * depth)));
  }

  // alpha = 0 equals the upsampled previous stage exactly
  for (int depth = 2; depth <= 3; ++depth) {
    const RMat prev = g.synthesize(w, depth - 1, 1.0);
    RMat up(prev.rows() * 4, prev.cols() * 4);
    for (long long r = 0; r < up.rows(); ++r)
      for (long long c = 0; c < up.cols(); ++c) up(r, c) = prev(r / 4, c / 4);
    const RMat faded = g.synthesize(w, depth, 0.0);
    CHECK((faded - up).cwiseAbs().maxCoeff() == 0.0);
  }

  // the blend is linear: alpha = 0.5 output is the elementwise endpoint mean
  const RMat lo = g.synthesize(w, 2, 0.0);
  const RMat hi = g.synthesize(w, 2, 1.0);
  const RMat mid = g.synthesize(w, 2, 0.5);
  CHECK((mid - (lo + hi) / 2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(g.synthesize(w, 0, 1.0), Error);
  CHECK_THROWS_AS(g.synthesize(w, 4, 1.0), Error);
}

TEST_CASE("determinism: fixed seed gives bit-identical output") {
  Rng rng(4);
  Generator g(tiny_config(), rng);
  RVec z(6);
  for (int i = 0; i < 6; ++i) z[i] = rng.normal();
  Rng n1(99), n2(99);
  const RMat a = g.generate(z, 3, 0.6, &n1);
  const RMat b = g.generate(z, 3, 0.6, &n2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("AdaIN output carries the style-projected statistics") {
  GeneratorConfig cfg = tiny_config();
  cfg.noise = false;
  Rng rng(5);
  Generator g(cfg, rng);
  RVec z(6);
  for (int i = 0; i < 6; ++i) z[i] = rng.normal();
  const RVec w = g.map_latent(z);

  SynthCache cache;
  g.synthesize(w, 3, 1.0, nullptr, &cache);
  for (int b = 0; b < 3; ++b) {
    const Tensor& out = cache.block_out[b];
    const SynthLayerCache& lc = cache.layers[2 * b + 1];
    const double n_pix = static_cast<double>(out.plane_size());
    for (int c = 0; c < cfg.channels; ++c) {
      double mean = 0;
      for (long long i = 0; i < out.plane_size(); ++i) mean += out.plane(c)[i];
      mean /= n_pix;
      double var = 0;
      for (long long i = 0; i < out.plane_size(); ++i) {
        const double d = out.plane(c)[i] - mean;
        var += d * d;
      }
      var /= n_pix;
      CHECK(std::abs(mean - lc.yb[c]) < 1e-6);
      CHECK(std::abs(std::sqrt(var) - std::abs(lc.ys[c])) < 1e-6);
    }
  }
}

TEST_CASE("style mixing routes styles around the crossover") {
  Rng rng(6);
  Generator g(tiny_config(), rng);
  RVec z1(6), z2(6);
  for (int i = 0; i < 6; ++i) {
    z1[i] = rng.normal();
    z2[i] = rng.normal();
  }
  const RVec w1 = g.map_latent(z1);
  const RVec w2 = g.map_latent(z2);

  CHECK((g.style_mix(z1, z1, 2, 3, 1.0) - g.synthesize(w1, 3, 1.0)).cwiseAbs().maxCoeff() == 0.0);
  // crossover at the first block: everything takes w2
  CHECK((g.style_mix(z1, z2, 1, 3, 1.0) - g.synthesize(w2, 3, 1.0)).cwiseAbs().maxCoeff() == 0.0);

  // manual routing oracle at crossover 3
  const RMat mixed = g.style_mix(z1, z2, 3, 3, 1.0);
  const RMat routed = g.synthesize_with_styles({w1, w1, w2}, 3, 1.0, nullptr, nullptr);
  CHECK((mixed - routed).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(g.style_mix(z1, z2, 4, 3, 1.0), Error);
}

TEST_CASE("single linear layer gradient is the closed-form outer product") {
  Rng rng(7);
  FcLayer fc;
  fc.init(3, 4, 1.0, rng);
  RVec x(4), gout(3);
  for (int i = 0; i < 4; ++i) x[i] = rng.normal();
  for (int i = 0; i < 3; ++i) gout[i] = rng.normal();
  fc.backward(x, gout);
  const RMat expect = fc.scale * gout * x.transpose();
  CHECK((fc.gw - expect).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((fc.gb - gout).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conv3x3 backward matches finite differences") {
  Rng rng(8);
  Conv3x3 conv;
  conv.init(2, 2, std::sqrt(2.0), rng);
  Tensor x(2, 5, 5);
  for (long long i = 0; i < x.size(); ++i) x.data[i] = rng.normal();
  Tensor gout(2, 5, 5);
  for (long long i = 0; i < gout.size(); ++i) gout.data[i] = rng.normal();

  const Tensor gin = conv.backward(x, gout);
  auto loss = [&](const Conv3x3& cc, const Tensor& xx) {
    return cc.forward(xx).data.dot(gout.data);
  };
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const int idx = static_cast<int>(rng.below(conv.w.size()));
    Conv3x3 up = conv, dn = conv;
    up.w.data()[idx] += h;
    dn.w.data()[idx] -= h;
    const double fd = (loss(up, x) - loss(dn, x)) / (2 * h);
    CHECK(std::abs(fd - conv.gw.data()[idx]) < 1e-6);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const int idx = static_cast<int>(rng.below(x.size()));
    Tensor up = x, dn = x;
    up.data[idx] += h;
    dn.data[idx] -= h;
    const double fd = (loss(conv, up) - loss(conv, dn)) / (2 * h);
    CHECK(std::abs(fd - gin.data[idx]) < 1e-6);
  }
}

TEST_CASE("full generator gradients match finite differences on a depth-2 config") {
  Rng rng(9);
  Generator g(tiny_config(), rng);
  RVec z(6);
  for (int i = 0; i < 6; ++i) z[i] = rng.normal();
  Rng noise_rng(42);
  const NoiseFields noise = g.sample_noise(2, noise_rng);
  RMat w_probe(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) w_probe(r, c) = rng.normal();

  const int depth = 2;
  const double alpha = 0.7;

  MapCache mc;
  SynthCache sc;
  const RVec w = g.map_latent_cached(z, mc);
  g.synthesize(w, depth, alpha, &noise, &sc);
  g.zero_grads();
  const std::vector<RVec> g_styles = g.synthesize_backward(sc, w_probe);
  RVec g_w = RVec::Zero(6);
  for (const RVec& gs : g_styles) g_w += gs;
  g.map_backward(mc, g_w);
  const std::vector<double> grads = grad_values(g);

  auto loss = [&]() {
    return map_loss(g.synthesize(g.map_latent(z), depth, alpha, &noise, nullptr), w_probe);
  };
  const std::vector<double*> ptrs = param_ptrs(g);
  REQUIRE(ptrs.size() == grads.size());
  const double h = 1e-4;
  int checked = 0, zero_grad_params = 0;
  for (size_t k = 0; k < ptrs.size(); k += 3) {  // sweep a third of the parameters
    const double orig = *ptrs[k];
    *ptrs[k] = orig + h;
    const double up = loss();
    *ptrs[k] = orig - h;
    const double dn = loss();
    *ptrs[k] = orig;
    const double fd = (up - dn) / (2 * h);
    const double tol = 1e-3 * std::max({std::abs(fd), std::abs(grads[k]), 1e-4});
    CHECK(std::abs(fd - grads[k]) <= tol);
    ++checked;
    if (grads[k] == 0.0 && fd == 0.0) ++zero_grad_params;
  }
  CHECK(checked > 100);
  // parameters of the inactive third block do not influence a depth-2 loss
  CHECK(zero_grad_params > 0);
}
