#include "qsgan/qlayers.hpp"

#include <algorithm>

namespace qsgan {

void LayerSpec::validate() const {
  int expected = 0;
  switch (kind) {
    case LayerKind::QuConv:
      expected = kQuConvUnitParams * static_cast<int>(pairing.size());
      break;
    case LayerKind::QuPool:
      expected = kQuPoolUnitParams * static_cast<int>(pairing.size());
      break;
    case LayerKind::QuDense:
      expected = 3 * n_qubits;
      if (static_cast<int>(pairing.size()) != n_qubits - 1)
        fail(ErrorKind::BadShape, "dense layer needs an n-1 CNOT chain");
      break;
    case LayerKind::QuBlur:
      expected = kBlurParamCount;
      break;
  }
  if (param_count != expected)
    fail(ErrorKind::BadShape, "layer parameter count does not match its tiling");
  for (const auto& [a, b] : pairing)
    if (a == b || a < 0 || b < 0 || a >= n_qubits || b >= n_qubits)
      fail(ErrorKind::BadQubitSet, "bad layer pairing");
}

std::vector<Gate> quconv_unit(int a, int b, int off) {
  return {Gate::rx(a, off),     Gate::ry(a, off + 1), Gate::rz(a, off + 2),
          Gate::rx(b, off + 3), Gate::ry(b, off + 4), Gate::rz(b, off + 5),
          Gate::cnot(a, b)};
}

std::vector<Gate> qupool_unit(int a, int b, int off) {
  return {Gate::rx(a, off), Gate::ry(a, off + 1), Gate::rx(b, off + 2), Gate::ry(b, off + 3),
          Gate::cnot(b, a)};
}

LayerSpec quconv_layer_spec(int n_qubits) {
  if (n_qubits < 2 || n_qubits % 2 != 0)
    fail(ErrorKind::BadDimension, "conv layer needs an even qubit count >= 2");
  LayerSpec s;
  s.kind = LayerKind::QuConv;
  s.n_qubits = n_qubits;
  for (int q = 0; q + 1 < n_qubits; q += 2) s.pairing.emplace_back(q, q + 1);
  for (int q = 1; q + 1 < n_qubits; q += 2) s.pairing.emplace_back(q, q + 1);
  s.param_count = kQuConvUnitParams * static_cast<int>(s.pairing.size());
  return s;
}

LayerSpec qupool_layer_spec(int n_qubits) {
  if (n_qubits < 2 || n_qubits % 2 != 0)
    fail(ErrorKind::BadDimension, "pool layer needs an even qubit count >= 2");
  LayerSpec s;
  s.kind = LayerKind::QuPool;
  s.n_qubits = n_qubits;
  if (n_qubits == 2) {
    s.pairing.emplace_back(0, 1);
  } else {
    s.pairing.emplace_back(0, n_qubits - 1);
    s.pairing.emplace_back(1, n_qubits - 2);
  }
  s.param_count = kQuPoolUnitParams * static_cast<int>(s.pairing.size());
  return s;
}

LayerSpec qudense_layer_spec(int n_qubits) {
  if (n_qubits < 2) fail(ErrorKind::BadDimension, "dense layer needs >= 2 qubits");
  LayerSpec s;
  s.kind = LayerKind::QuDense;
  s.n_qubits = n_qubits;
  s.param_count = 3 * n_qubits;
  for (int q = 0; q + 1 < n_qubits; ++q) s.pairing.emplace_back(q, q + 1);
  return s;
}

LayerSpec qublur_layer_spec(int n_qubits) {
  if (n_qubits < 4 || n_qubits % 2 != 0)
    fail(ErrorKind::BadDimension, "blur layer needs an even qubit count >= 4");
  LayerSpec s;
  s.kind = LayerKind::QuBlur;
  s.n_qubits = n_qubits;
  s.param_count = kBlurParamCount;
  s.pairing.emplace_back(0, 1);
  return s;
}

std::vector<Gate> layer_gates(const LayerSpec& spec, int param_offset) {
  std::vector<Gate> gates;
  int off = param_offset;
  switch (spec.kind) {
    case LayerKind::QuConv:
      for (const auto& [a, b] : spec.pairing) {
        auto unit = quconv_unit(a, b, off);
        gates.insert(gates.end(), unit.begin(), unit.end());
        off += kQuConvUnitParams;
      }
      break;
    case LayerKind::QuPool:
      for (const auto& [a, b] : spec.pairing) {
        auto unit = qupool_unit(a, b, off);
        gates.insert(gates.end(), unit.begin(), unit.end());
        off += kQuPoolUnitParams;
      }
      break;
    case LayerKind::QuDense:
      for (int q = 0; q < spec.n_qubits; ++q) {
        gates.push_back(Gate::rx(q, off));
        gates.push_back(Gate::ry(q, off + 1));
        gates.push_back(Gate::rz(q, off + 2));
        off += 3;
      }
      for (const auto& [a, b] : spec.pairing) gates.push_back(Gate::cnot(a, b));
      break;
    case LayerKind::QuBlur:
      fail(ErrorKind::BadShape, "blur is not a plain gate layer");
  }
  return gates;
}

std::vector<Gate> blur_kernel_gates(int off) {
  return {Gate::rx(0, off), Gate::ry(0, off + 1), Gate::rx(1, off + 2), Gate::ry(1, off + 3),
          Gate::cnot(0, 1), Gate::rz(1, off + 4)};
}

BlurKernel BlurKernel::from_params(const RVec& params5) {
  if (params5.size() != kBlurParamCount)
    fail(ErrorKind::BadLength, "blur kernel takes exactly 5 parameters");
  BlurKernel k;
  k.circuit.n_qubits = 2;
  k.circuit.gates = blur_kernel_gates(0);
  k.circuit.params = params5;
  return k;
}

DensityMatrix qudense_layer(const DensityMatrix& rho, const RVec& params) {
  const int n = rho.n_qubits();
  const LayerSpec spec = qudense_layer_spec(n);
  if (params.size() != spec.param_count)
    fail(ErrorKind::DimMismatch, "dense layer parameter count mismatch");
  ParamCircuit c;
  c.n_qubits = n;
  c.gates = layer_gates(spec, 0);
  c.params = params;
  return apply_circuit(rho, c);
}

// --- differentiable encoding ---

DensityMatrix encode_feature_map_cached(const RMat& m, EncodeCache* cache, bool fallback) {
  if (m.rows() != m.cols() || !is_power_of_two(m.rows()))
    fail(ErrorKind::BadLength, "feature map must be square with power-of-two side");
  const RVec d = m.diagonal();
  const RVec c = d.cwiseMax(0.0);
  const double sq_norm = c.sum();
  const bool degenerate = sq_norm == 0.0;
  if (degenerate && !fallback)
    fail(ErrorKind::ZeroVector, "feature map diagonal is non-positive everywhere");
  RVec amp = c.cwiseSqrt();
  if (cache) {
    cache->diag = d;
    cache->amp = amp;
    cache->sq_norm = sq_norm;
    cache->degenerate = degenerate;
    cache->dim = m.rows();
  }
  if (degenerate) return DensityMatrix::maximally_mixed(qubit_count_for_dim(m.rows()));
  const RVec u = amp / std::sqrt(sq_norm);
  return wrap_unchecked((u * u.transpose()).cast<cxd>());
}

RVec encode_feature_map_backward(const EncodeCache& cache, const CMat& g_out) {
  RVec g_diag = RVec::Zero(cache.dim);
  if (cache.degenerate) return g_diag;
  const RMat r = g_out.real();
  const RVec v = cache.amp;
  const double n2 = cache.sq_norm;
  const RVec w = (r + r.transpose()) * v;
  const double q = v.dot(r * v);
  for (long long i = 0; i < cache.dim; ++i) {
    if (cache.diag[i] <= 0.0) continue;  // clamped region
    const double s = 0.5 / v[i];
    g_diag[i] = s * w[i] / n2 - q / (n2 * n2);
  }
  return g_diag;
}

// --- blur convolution ---

DensityMatrix blur_layer(const DensityMatrix& rho, const RVec& kernel_params, BlurCache* cache) {
  const int n = rho.n_qubits();
  if (n < 4 || n % 2 != 0)
    fail(ErrorKind::BadDimension, "blur layer needs an even qubit count >= 4");
  if (kernel_params.size() != kBlurParamCount)
    fail(ErrorKind::BadLength, "blur kernel takes exactly 5 parameters");
  const long long side = rho.dim();
  const long long tiles = side / 4;
  const std::vector<Gate> kernel = blur_kernel_gates(0);

  const RMat feat = rho.mat().real();
  RMat assembled(side, side);
  if (cache) {
    cache->side = side;
    cache->tile_encodes.assign(tiles, {});
    cache->tile_evolved.assign(tiles, {});
  }
  EncodeCache tile_cache;
  for (long long ti = 0; ti < tiles; ++ti)
    for (long long tj = 0; tj < tiles; ++tj) {
      const RMat tile = feat.block(4 * ti, 4 * tj, 4, 4);
      DensityMatrix tau = encode_feature_map_cached(tile, &tile_cache, /*fallback=*/true);
      conjugate_gates_inplace(tau.mat(), kernel, kernel_params);
      assembled.block(4 * ti, 4 * tj, 4, 4) = tau.mat().real();
      if (cache && ti == tj) {
        cache->tile_encodes[ti] = tile_cache;
        cache->tile_evolved[ti] = tau.mat();
      }
    }
  return encode_feature_map_cached(assembled, cache ? &cache->final_encode : nullptr,
                                   /*fallback=*/true);
}

CMat blur_backward(const BlurCache& cache, const RVec& kernel_params, const CMat& g_out,
                   Eigen::Ref<RVec> kernel_grads) {
  const long long side = cache.side;
  const long long tiles = side / 4;
  CMat g_in = CMat::Zero(side, side);
  const RVec g_assembled_diag = encode_feature_map_backward(cache.final_encode, g_out);
  if (cache.final_encode.degenerate) return g_in;
  const std::vector<Gate> kernel = blur_kernel_gates(0);
  for (long long t = 0; t < tiles; ++t) {
    if (cache.tile_encodes[t].degenerate) continue;
    // only the diagonal of a diagonal tile reaches the output; its entries are
    // the real parts of the evolved state
    CMat g_tau = CMat::Zero(4, 4);
    for (int r = 0; r < 4; ++r) g_tau(r, r) = g_assembled_diag[4 * t + r];
    CMat state = cache.tile_evolved[t];
    gates_backward(kernel, kernel_params, state, g_tau, kernel_grads);
    const RVec g_tile_diag = encode_feature_map_backward(cache.tile_encodes[t], g_tau);
    for (int r = 0; r < 4; ++r) g_in(4 * t + r, 4 * t + r) += g_tile_diag[r];
  }
  return g_in;
}

// --- reverse mode ---

void gates_backward(const std::vector<Gate>& gates, const RVec& params, CMat& rho, CMat& g,
                    Eigen::Ref<RVec> param_grads) {
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) {
    const Gate& gate = *it;
    if (gate.is_rotation()) {
      const Eigen::Matrix2cd p = pauli_for(gate.kind);
      CMat a = rho;
      left_mul_single(a, p, gate.target);  // P rho_out
      CMat b = rho;
      right_mul_single(b, p, gate.target);  // rho_out P
      a -= b;
      // dL/dtheta = Re Tr(g† (-i/2)[P, rho_out]) = Im(sum conj(g) .* [P,rho]) / 2
      const cxd z = g.conjugate().cwiseProduct(a).sum();
      param_grads[gate.param_index] += 0.5 * z.imag();
      const Eigen::Matrix2cd u_inv = rotation_matrix(gate.kind, -params[gate.param_index]);
      left_mul_single(rho, u_inv, gate.target);
      right_mul_single(rho, u_inv.adjoint(), gate.target);
      left_mul_single(g, u_inv, gate.target);
      right_mul_single(g, u_inv.adjoint(), gate.target);
    } else {
      left_mul_cnot(rho, gate.control, gate.target);
      right_mul_cnot(rho, gate.control, gate.target);
      left_mul_cnot(g, gate.control, gate.target);
      right_mul_cnot(g, gate.control, gate.target);
    }
  }
}

RVec quantum_grads(const ParamCircuit& c, const DensityMatrix& rho_in, const CMat& observable) {
  c.validate();
  if (rho_in.dim() != (1LL << c.n_qubits) || observable.rows() != rho_in.dim() ||
      observable.cols() != rho_in.dim())
    fail(ErrorKind::DimMismatch, "quantum_grads dimension mismatch");
  if (!c.params.allFinite()) fail(ErrorKind::NonFinite, "non-finite circuit parameters");
  CMat rho = rho_in.mat();
  conjugate_gates_inplace(rho, c.gates, c.params);
  CMat g = observable;
  RVec grads = RVec::Zero(c.params.size());
  gates_backward(c.gates, c.params, rho, g, grads);
  if (!grads.allFinite()) fail(ErrorKind::NonFinite, "non-finite gradient");
  return grads;
}

}  // namespace qsgan
