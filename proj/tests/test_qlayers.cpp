#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsgan/qlayers.hpp"
#include "qsgan/rng.hpp"
#include "support.hpp"

using namespace qsgan;

namespace {

// literal three-step script: partition, evolve with the dense kernel matrix,
// reassemble and re-encode
CMat blur_oracle(const CMat& rho, const RVec& kparams) {
  const long long side = rho.rows();
  const RMat feat = rho.real();
  RMat out(side, side);
  ParamCircuit kc;
  kc.n_qubits = 2;
  kc.gates = blur_kernel_gates(0);
  kc.params = kparams;
  const CMat kmat = oracle::circuit_matrix(kc);
  for (long long ti = 0; ti < side / 4; ++ti)
    for (long long tj = 0; tj < side / 4; ++tj) {
      const RMat tile = feat.block(4 * ti, 4 * tj, 4, 4);
      const RVec amp = tile.diagonal().cwiseMax(0.0).cwiseSqrt();
      CMat tau;
      if (amp.norm() == 0.0) {
        tau = CMat::Identity(4, 4) / 4.0;
      } else {
        const RVec u = amp / amp.norm();
        tau = (u * u.transpose()).cast<cxd>();
      }
      tau = kmat * tau * kmat.adjoint();
      out.block(4 * ti, 4 * tj, 4, 4) = tau.real();
    }
  const RVec amp = out.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (amp.norm() == 0.0) return CMat::Identity(side, side) / static_cast<double>(side);
  const RVec u = amp / amp.norm();
  return (u * u.transpose()).cast<cxd>();
}

double loss_under_observable(const CMat& state, const CMat& w) {
  return (w.conjugate().cwiseProduct(state)).sum().real();
}

}  // namespace

TEST_CASE("quconv unit topology") {
  // zero rotations leave only the CNOT
  ParamCircuit c;
  c.n_qubits = 2;
  c.gates = quconv_unit(0, 1, 0);
  c.params = RVec::Zero(6);
  const CMat u = circuit_unitary(c);
  const CMat cnot = oracle::gate_matrix(Gate::cnot(0, 1), RVec(), 2);
  CHECK(oracle::max_abs_diff(u, cnot) < 1e-15);

  Rng rng(3);
  for (int i = 0; i < 6; ++i) c.params[i] = rng.uniform(-M_PI, M_PI);
  const CMat u2 = circuit_unitary(c);
  CHECK(oracle::max_abs_diff(u2.adjoint() * u2, CMat::Identity(4, 4)) < 1e-9);

  c.params = RVec::Zero(6);
  c.params[0] = M_PI;
  auto evolved = apply_circuit(DensityMatrix::pure_basis(2, 0), c);
  CHECK(oracle::max_abs_diff(evolved.mat(), oracle::apply_circuit(
                                                DensityMatrix::pure_basis(2, 0).mat(), c)) <
        1e-12);
}

TEST_CASE("qupool unit topology and trace behaviour") {
  ParamCircuit c;
  c.n_qubits = 2;
  c.gates = qupool_unit(0, 1, 0);
  c.params = RVec::Zero(4);
  const CMat cnot_rev = oracle::gate_matrix(Gate::cnot(1, 0), RVec(), 2);
  CHECK(oracle::max_abs_diff(circuit_unitary(c), cnot_rev) < 1e-15);

  // zero-rotation unit then tracing b leaves a product state's a untouched
  Rng rng(5);
  auto a = oracle::random_density(rng, 1);
  const CMat zero = DensityMatrix::pure_basis(1, 0).mat();
  const CMat prod = oracle::kron(zero, a.mat());  // qubit 0 = a, qubit 1 = |0>
  auto evolved = apply_circuit(DensityMatrix::from_matrix(prod), c);
  auto reduced = partial_trace(evolved, {1});
  CHECK(oracle::max_abs_diff(reduced.mat(), a.mat()) < 1e-12);

  for (int t = 0; t < 10; ++t) {
    for (int i = 0; i < 4; ++i) c.params[i] = rng.uniform(-M_PI, M_PI);
    auto rho = oracle::random_density(rng, 2);
    auto got = apply_circuit(rho, c);
    CHECK(oracle::max_abs_diff(got.mat(), oracle::apply_circuit(rho.mat(), c)) < 1e-10);
    CHECK(got.is_valid(1e-10));
  }
}

TEST_CASE("qudense layer") {
  Rng rng(7);
  auto rho = oracle::random_density(rng, 2);
  auto out = qudense_layer(rho, RVec::Zero(6));
  ParamCircuit cnot;
  cnot.n_qubits = 2;
  cnot.gates = {Gate::cnot(0, 1)};
  CHECK(oracle::max_abs_diff(out.mat(), apply_circuit(rho, cnot).mat()) < 1e-15);

  for (int t = 0; t < 10; ++t) {
    const int n = 2 + 2 * static_cast<int>(rng.below(2));
    RVec params(3 * n);
    for (int i = 0; i < params.size(); ++i) params[i] = rng.uniform(-M_PI, M_PI);
    auto in = oracle::random_density(rng, n);
    auto got = qudense_layer(in, params);
    CHECK(std::abs(got.mat().trace().real() - 1.0) < 1e-10);
    ParamCircuit c;
    c.n_qubits = n;
    c.gates = layer_gates(qudense_layer_spec(n), 0);
    c.params = params;
    CHECK(oracle::max_abs_diff(got.mat(), oracle::apply_circuit(in.mat(), c)) < 1e-10);
  }
}

TEST_CASE("layer specs satisfy their counting invariants") {
  for (int n : {2, 4, 6, 8, 10}) {
    const auto conv = quconv_layer_spec(n);
    conv.validate();
    CHECK(conv.param_count == 6 * (n - 1));
    const auto pool = qupool_layer_spec(n);
    pool.validate();
    CHECK(pool.param_count == (n == 2 ? 4 : 8));
    qudense_layer_spec(n).validate();
  }
  for (int n : {4, 6, 8, 10}) {
    const auto blur = qublur_layer_spec(n);
    blur.validate();
    CHECK(blur.param_count == 5);
    CHECK(blur.param_count < quconv_layer_spec(n).param_count);
  }
  CHECK_THROWS_AS(qublur_layer_spec(2), Error);
  CHECK_THROWS_AS(qublur_layer_spec(5), Error);
}

TEST_CASE("blur layer preserves invariants and is deterministic") {
  Rng rng(11);
  auto rho = oracle::random_density(rng, 4);
  const RVec zero = RVec::Zero(5);
  auto out = blur_layer(rho, zero);
  CHECK(out.is_valid(1e-10));

  RVec kp(5);
  for (int i = 0; i < 5; ++i) kp[i] = rng.uniform(-M_PI, M_PI);
  auto out1 = blur_layer(rho, kp);
  auto out2 = blur_layer(rho, kp);
  CHECK(oracle::max_abs_diff(out1.mat(), out2.mat()) == 0.0);
  CHECK(out1.is_valid(1e-10));

  CHECK_THROWS_AS(blur_layer(oracle::random_density(rng, 2), kp), Error);
}

TEST_CASE("blur layer matches the scripted three-step oracle") {
  Rng rng(13);
  // hand-built block-diagonal state: weighted pure 2-qubit tiles on the diagonal
  CMat m = CMat::Zero(16, 16);
  RVec weights(4);
  weights << 0.4, 0.3, 0.2, 0.1;
  for (int t = 0; t < 4; ++t) {
    auto pure = oracle::random_pure(rng, 2);
    m.block(4 * t, 4 * t, 4, 4) = weights[t] * pure.mat();
  }
  auto rho = DensityMatrix::from_matrix(m);
  REQUIRE(rho.is_valid(1e-10));

  RVec kp(5);
  for (int i = 0; i < 5; ++i) kp[i] = rng.uniform(-M_PI, M_PI);
  CHECK(oracle::max_abs_diff(blur_layer(rho, kp).mat(), blur_oracle(rho.mat(), kp)) < 1e-12);

  for (int t = 0; t < 5; ++t) {
    auto r = oracle::random_density(rng, 4);
    CHECK(oracle::max_abs_diff(blur_layer(r, kp).mat(), blur_oracle(r.mat(), kp)) < 1e-12);
  }
}

TEST_CASE("quantum_grads closed forms") {
  // observable independent of the parameter: RZ on a basis state
  ParamCircuit rz;
  rz.n_qubits = 1;
  rz.gates = {Gate::rz(0, 0)};
  rz.params = RVec::Constant(1, 0.9);
  CMat z(2, 2);
  z << 1, 0, 0, -1;
  const RVec g0 = quantum_grads(rz, DensityMatrix::pure_basis(1, 0), z);
  CHECK(std::abs(g0[0]) < 1e-14);

  // expect_z after RX(theta) on |0><0| is cos(theta); gradient -sin(theta)
  for (double theta : {0.0, 0.3, 1.2, -2.5}) {
    ParamCircuit rx;
    rx.n_qubits = 1;
    rx.gates = {Gate::rx(0, 0)};
    rx.params = RVec::Constant(1, theta);
    const RVec g = quantum_grads(rx, DensityMatrix::pure_basis(1, 0), z);
    CHECK(g[0] == doctest::Approx(-std::sin(theta)).epsilon(1e-12));
  }
}

TEST_CASE("reverse-mode gradients agree with shift rule and finite differences") {
  Rng rng(17);
  for (int t = 0; t < 12; ++t) {
    const int n = 2 + static_cast<int>(rng.below(3));
    auto c = oracle::random_circuit(rng, n, 10);
    if (c.params.size() == 0) continue;
    auto rho = oracle::random_density(rng, n);
    // Hermitian observable: Z on qubit 0
    CMat obs = CMat::Zero(1LL << n, 1LL << n);
    for (long long i = 0; i < obs.rows(); ++i) obs(i, i) = (i & 1) ? -1.0 : 1.0;

    const RVec reverse = quantum_grads(c, rho, obs);
    auto loss = [&](const RVec& p) {
      ParamCircuit cc = c;
      cc.params = p;
      return loss_under_observable(apply_circuit(rho, cc).mat(), obs);
    };
    const RVec shift = oracle::parameter_shift_grads(loss, c.params);
    const RVec fd = oracle::finite_diff_grads(loss, c.params, 1e-5);
    CHECK((reverse - shift).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((reverse - fd).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("gates_backward restores the segment input state") {
  Rng rng(19);
  auto c = oracle::random_circuit(rng, 3, 14);
  auto rho_in = oracle::random_density(rng, 3);
  CMat rho = rho_in.mat();
  conjugate_gates_inplace(rho, c.gates, c.params);
  CMat g = oracle::random_complex(rng, 8, 8);
  RVec grads = RVec::Zero(std::max<long long>(1, c.params.size()));
  gates_backward(c.gates, c.params, rho, g, grads);
  CHECK(oracle::max_abs_diff(rho, rho_in.mat()) < 1e-11);
}

TEST_CASE("encode_feature_map backward matches finite differences") {
  Rng rng(23);
  RMat m = RMat::Zero(8, 8);
  for (int i = 0; i < 8; ++i) m(i, i) = rng.uniform(-0.5, 2.0);
  m(1, 1) = -1.0;  // exercise the clamp
  const CMat w = oracle::random_complex(rng, 8, 8);

  EncodeCache cache;
  auto out = encode_feature_map_cached(m, &cache, true);
  REQUIRE(!cache.degenerate);
  (void)out;
  const RVec g = encode_feature_map_backward(cache, w);
  CHECK(g[1] == 0.0);

  for (int i = 0; i < 8; ++i) {
    const double h = 1e-7;
    RMat up = m, dn = m;
    up(i, i) += h;
    dn(i, i) -= h;
    const double fd = (loss_under_observable(encode_feature_map_cached(up, nullptr, true).mat(), w) -
                       loss_under_observable(encode_feature_map_cached(dn, nullptr, true).mat(), w)) /
                      (2 * h);
    CHECK(std::abs(fd - g[i]) < 1e-6);
  }

  RMat dead = -RMat::Identity(4, 4);
  EncodeCache dc;
  auto mixed = encode_feature_map_cached(dead, &dc, true);
  CHECK(dc.degenerate);
  CHECK(oracle::max_abs_diff(mixed.mat(), CMat::Identity(4, 4) / 4.0) == 0.0);
  CHECK(encode_feature_map_backward(dc, w.block(0, 0, 4, 4)).isZero(0.0));
}

TEST_CASE("blur backward matches finite differences") {
  Rng rng(29);
  auto rho = oracle::random_density(rng, 4);
  RVec kp(5);
  for (int i = 0; i < 5; ++i) kp[i] = rng.uniform(-1.5, 1.5);
  const CMat w = oracle::random_complex(rng, 16, 16);

  BlurCache cache;
  auto out = blur_layer(rho, kp, &cache);
  (void)out;
  RVec kgrads = RVec::Zero(5);
  const CMat g_in = blur_backward(cache, kp, w, kgrads);

  auto loss = [&](const RVec& p) {
    return loss_under_observable(blur_layer(rho, p).mat(), w);
  };
  const RVec fd = oracle::finite_diff_grads(loss, kp, 1e-6);
  CHECK((kgrads - fd).cwiseAbs().maxCoeff() < 1e-6);

  // input gradient: diagonal entries carry it, off-diagonal entries do not
  for (int i = 0; i < 16; i += 3) {
    const double h = 1e-7;
    CMat up = rho.mat(), dn = rho.mat();
    up(i, i) += h;
    dn(i, i) -= h;
    const double fd_in =
        (loss_under_observable(blur_layer(DensityMatrix::from_matrix(up), kp).mat(), w) -
         loss_under_observable(blur_layer(DensityMatrix::from_matrix(dn), kp).mat(), w)) /
        (2 * h);
    CHECK(std::abs(fd_in - g_in(i, i).real()) < 1e-5);
  }
  CHECK(std::abs(g_in(0, 1)) == 0.0);
}
