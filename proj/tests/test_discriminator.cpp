#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsgan/discriminator.hpp"
#include "support.hpp"

using namespace qsgan;

TEST_CASE("parameter counts follow the fixed topologies") {
  Rng rng(1);
  QuantumDiscriminator d2(2, rng);
  // one conv unit (6) + one pool unit (4) + dense (6)
  CHECK(d2.param_count() == 16);

  QuantumDiscriminator d4(4, rng);
  const int w4_block = 6 * 3 + 8 + kBlurParamCount + 6 * 3 + 8;
  CHECK(d4.param_count() == 16 + w4_block);
  // the blur kernel contributes exactly 5 to each wide block
  CHECK(d4.param_count() - (16 + 6 * 3 + 8 + 6 * 3 + 8) == 5);

  QuantumDiscriminator d10(10, rng);
  long long expected = 16;
  for (int w : {10, 8, 6, 4}) expected += 2 * (6 * (w - 1) + 8) + kBlurParamCount;
  CHECK(d10.param_count() == expected);

  ClassicalDiscriminator classical(5, 8, rng);
  CHECK(d10.param_count() < classical.param_count());
}

TEST_CASE("zero-parameter 2-qubit block matches a gate-by-gate oracle") {
  Rng rng(2);
  QuantumDiscriminator d(2, rng);
  d.params.setZero();
  const auto rho = DensityMatrix::pure_basis(2, 0);
  const double score = d.discriminate(rho, 1, 1.0);

  // scripted: conv unit, pool unit, dense with zero angles, gate by gate
  CMat state = rho.mat();
  ParamCircuit all;
  all.n_qubits = 2;
  all.gates = d.blocks().back().circuit_a();
  all.params = RVec::Zero(d.param_count());
  for (const Gate& g : all.gates) {
    const CMat u = oracle::gate_matrix(g, all.params, 2);
    state = u * state * u.adjoint();
  }
  const CMat one = oracle::partial_trace(state, 2, {1});
  const double expect = one(0, 0).real() - one(1, 1).real();
  CHECK(score == doctest::Approx(expect).epsilon(1e-12));
  CHECK(score == doctest::Approx(1.0));
}

TEST_CASE("random instance matches a dense layer-by-layer oracle") {
  Rng rng(3);
  QuantumDiscriminator d(4, rng);
  auto rho = oracle::random_density(rng, 4);
  const double score = d.discriminate(rho, 2, 1.0);

  // dense script of the 4-qubit block: circuits as matrices, literal blur,
  // partial trace, then the 2-qubit block
  const DiscBlock& big = d.blocks().front();
  ParamCircuit ca;
  ca.n_qubits = 4;
  ca.gates = big.circuit_a();
  ca.params = d.params;
  CMat x = oracle::apply_circuit(rho.mat(), ca);
  x = blur_layer(DensityMatrix::from_matrix(x), d.params.segment(big.blur_offset, 5)).mat();
  ParamCircuit cb = ca;
  cb.gates = big.circuit_b();
  x = oracle::apply_circuit(x, cb);
  x = oracle::partial_trace(x, 4, {2, 3});
  ParamCircuit last;
  last.n_qubits = 2;
  last.gates = d.blocks().back().circuit_a();
  last.params = d.params;
  x = oracle::apply_circuit(x, last);
  x = oracle::partial_trace(x, 2, {1});
  CHECK(score == doctest::Approx(x(0, 0).real() - x(1, 1).real()).epsilon(1e-10));
}

TEST_CASE("scores stay in [-1, 1] and runs are deterministic") {
  Rng rng(5);
  QuantumDiscriminator d(6, rng);
  for (int t = 0; t < 10; ++t) {
    const int depth = 1 + static_cast<int>(rng.below(3));
    const double alpha = rng.uniform01();
    auto rho = oracle::random_density(rng, 2 * depth);
    const double s = d.discriminate(rho, depth, alpha);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
    CHECK(d.discriminate(rho, depth, alpha) == s);
  }
  CHECK_THROWS_AS(d.discriminate(oracle::random_density(rng, 2), 4, 1.0), Error);
  CHECK_THROWS_AS(d.discriminate(oracle::random_density(rng, 4), 1, 1.0), Error);
}

TEST_CASE("fade endpoints and continuity") {
  Rng rng(7);
  QuantumDiscriminator d(6, rng);
  for (int depth = 2; depth <= 3; ++depth) {
    auto rho = oracle::random_density(rng, 2 * depth);
    // alpha = 0 reduces to the previous stage on the partial-traced input
    const double faded = d.discriminate(rho, depth, 0.0);
    const double prev = d.discriminate(trace_top_qubits(rho, 2), depth - 1, 1.0);
    CHECK(std::abs(faded - prev) < 1e-10);

    for (double alpha : {0.0, 0.3, 0.9}) {
      const double a = d.discriminate(rho, depth, alpha);
      const double b = d.discriminate(rho, depth, alpha + 1e-6);
      CHECK(std::abs(a - b) < 1e-4);
    }
  }
}

TEST_CASE("every intermediate state is a valid density matrix") {
  Rng rng(9);
  QuantumDiscriminator d(6, rng);
  int stages = 0;
  for (int t = 0; t < 5; ++t) {
    auto rho = oracle::random_density(rng, 6);
    d.discriminate_inspected(rho, 3, 0.5, [&](const DensityMatrix& m, const std::string& tag) {
      CAPTURE(tag);
      CHECK(m.is_valid(1e-9));
      ++stages;
    });
  }
  // per run: two wide blocks at 6 stages each, the fade blend, and the
  // 4-stage final block
  CHECK(stages == 5 * 17);
}

TEST_CASE("backward gradients match finite differences (params and input)") {
  Rng rng(11);
  QuantumDiscriminator d(4, rng);
  auto rho = oracle::random_density(rng, 4);
  const int depth = 2;
  const double alpha = 0.6;

  DiscCache cache;
  const double base = d.discriminate(rho, depth, alpha, &cache);
  (void)base;
  RVec grads = RVec::Zero(d.param_count());
  const CMat g_in = d.backward(cache, 1.0, grads);

  auto loss = [&](const RVec& p) {
    QuantumDiscriminator dd = d;
    dd.params = p;
    return dd.discriminate(rho, depth, alpha);
  };
  const RVec fd = oracle::finite_diff_grads(loss, d.params, 1e-5);
  CHECK((grads - fd).cwiseAbs().maxCoeff() < 1e-6);

  // input cotangent: real and imaginary parts of a few entries
  for (int trial = 0; trial < 6; ++trial) {
    const int i = static_cast<int>(rng.below(16));
    const int j = static_cast<int>(rng.below(16));
    const double h = 1e-6;
    CMat up = rho.mat(), dn = rho.mat();
    up(i, j) += h;
    dn(i, j) -= h;
    const double fd_re = (d.discriminate(wrap_unchecked(std::move(up)), depth, alpha) -
                          d.discriminate(wrap_unchecked(std::move(dn)), depth, alpha)) /
                         (2 * h);
    CHECK(std::abs(fd_re - g_in(i, j).real()) < 1e-5);
    CMat upi = rho.mat(), dni = rho.mat();
    upi(i, j) += cxd(0, h);
    dni(i, j) -= cxd(0, h);
    const double fd_im = (d.discriminate(wrap_unchecked(std::move(upi)), depth, alpha) -
                          d.discriminate(wrap_unchecked(std::move(dni)), depth, alpha)) /
                         (2 * h);
    CHECK(std::abs(fd_im - g_in(i, j).imag()) < 1e-5);
  }
}

TEST_CASE("classical baseline forward shapes and fade endpoint") {
  Rng rng(13);
  ClassicalDiscriminator d(3, 4, rng);
  RMat map(64, 64);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 64; ++c) map(r, c) = rng.normal();

  const double s = d.discriminate(map, 3, 1.0);
  CHECK(std::isfinite(s));
  const double s0 = d.discriminate(map, 3, 0.0);
  const double prev = d.discriminate(avgpool4(map), 2, 1.0);
  CHECK(s0 == doctest::Approx(prev).epsilon(1e-12));
}

TEST_CASE("classical baseline gradients match finite differences") {
  Rng rng(17);
  ClassicalDiscriminator d(2, 3, rng);
  RMat map(16, 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) map(r, c) = rng.normal();
  const int depth = 2;
  const double alpha = 0.4;

  ClassicalCache cache;
  d.discriminate(map, depth, alpha, &cache);
  d.zero_grads();
  const RMat g_map = d.backward(cache, 1.0);

  std::vector<double*> ptrs;
  std::vector<double> grads;
  d.visit_params([&](double* v, double* g, long long n) {
    for (long long i = 0; i < n; ++i) {
      ptrs.push_back(v + i);
      grads.push_back(g[i]);
    }
  });
  const double h = 1e-6;
  for (size_t k = 0; k < ptrs.size(); k += 2) {
    const double orig = *ptrs[k];
    *ptrs[k] = orig + h;
    const double up = d.discriminate(map, depth, alpha);
    *ptrs[k] = orig - h;
    const double dn = d.discriminate(map, depth, alpha);
    *ptrs[k] = orig;
    const double fd = (up - dn) / (2 * h);
    CHECK(std::abs(fd - grads[k]) < 1e-5);
  }

  for (int trial = 0; trial < 10; ++trial) {
    const int r = static_cast<int>(rng.below(16)), c = static_cast<int>(rng.below(16));
    RMat up = map, dn = map;
    up(r, c) += h;
    dn(r, c) -= h;
    const double fd = (d.discriminate(up, depth, alpha) - d.discriminate(dn, depth, alpha)) / (2 * h);
    CHECK(std::abs(fd - g_map(r, c)) < 1e-5);
  }
}
