#pragma once

// Test-side oracles. Everything here recomputes results through routes that
// are independent of the library implementation: dense Kronecker products,
// scatter-style partial traces, a hand-rolled Jacobi eigensolver, central
// finite differences and the parameter-shift rule.

#include <cmath>
#include <functional>
#include <vector>

#include "qsgan/densmat.hpp"
#include "qsgan/rng.hpp"

namespace oracle {

using qsgan::CMat;
using qsgan::cxd;
using qsgan::RVec;

inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long long ia = 0; ia < a.rows(); ++ia)
    for (long long ja = 0; ja < a.cols(); ++ja)
      out.block(ia * b.rows(), ja * b.cols(), b.rows(), b.cols()) = a(ia, ja) * b;
  return out;
}

// operator with factor `f` at qubit slot q (qubit 0 = least significant bit),
// identity elsewhere; factors listed per-qubit, most significant first
inline CMat place(int n_qubits, const std::vector<std::pair<int, CMat>>& factors) {
  CMat acc = CMat::Identity(1, 1);
  for (int q = n_qubits - 1; q >= 0; --q) {
    CMat f = CMat::Identity(2, 2);
    for (const auto& [slot, mat] : factors)
      if (slot == q) f = mat;
    acc = kron(acc, f);
  }
  return acc;
}

inline CMat pauli_x() {
  CMat x(2, 2);
  x << 0, 1, 1, 0;
  return x;
}

inline CMat gate_matrix(const qsgan::Gate& g, const RVec& params, int n_qubits) {
  if (g.is_rotation()) {
    const double th = params[g.param_index];
    const double c = std::cos(th / 2), s = std::sin(th / 2);
    CMat u(2, 2);
    switch (g.kind) {
      case qsgan::GateKind::RX:
        u << cxd(c, 0), cxd(0, -s), cxd(0, -s), cxd(c, 0);
        break;
      case qsgan::GateKind::RY:
        u << cxd(c, 0), cxd(-s, 0), cxd(s, 0), cxd(c, 0);
        break;
      default:
        u << std::exp(cxd(0, -th / 2)), cxd(0, 0), cxd(0, 0), std::exp(cxd(0, th / 2));
        break;
    }
    return place(n_qubits, {{g.target, u}});
  }
  CMat p0(2, 2), p1(2, 2);
  p0 << 1, 0, 0, 0;
  p1 << 0, 0, 0, 1;
  return place(n_qubits, {{g.control, p0}}) +
         place(n_qubits, {{g.control, p1}, {g.target, pauli_x()}});
}

inline CMat circuit_matrix(const qsgan::ParamCircuit& c) {
  const long long d = 1LL << c.n_qubits;
  CMat u = CMat::Identity(d, d);
  for (const auto& g : c.gates) u = gate_matrix(g, c.params, c.n_qubits) * u;
  return u;
}

inline CMat apply_circuit(const CMat& rho, const qsgan::ParamCircuit& c) {
  const CMat u = circuit_matrix(c);
  return u * rho * u.adjoint();
}

// scatter formulation: walk every entry of the full matrix and accumulate
inline CMat partial_trace(const CMat& m, int n_qubits, const std::vector<int>& remove) {
  std::vector<int> keep;
  for (int q = 0; q < n_qubits; ++q)
    if (std::find(remove.begin(), remove.end(), q) == remove.end()) keep.push_back(q);
  auto extract = [](long long idx, const std::vector<int>& bits) {
    long long out = 0;
    for (size_t k = 0; k < bits.size(); ++k) out |= ((idx >> bits[k]) & 1LL) << k;
    return out;
  };
  const long long d = 1LL << n_qubits;
  CMat out = CMat::Zero(1LL << keep.size(), 1LL << keep.size());
  std::vector<int> rem(remove);
  for (long long i = 0; i < d; ++i)
    for (long long j = 0; j < d; ++j)
      if (extract(i, rem) == extract(j, rem)) out(extract(i, keep), extract(j, keep)) += m(i, j);
  return out;
}

// cyclic complex-Hermitian Jacobi; eigenvectors in columns of v
inline void jacobi_hermitian(CMat a, RVec& evals, CMat& evecs) {
  const long long n = a.rows();
  evecs = CMat::Identity(n, n);
  for (int sweep = 0; sweep < 200; ++sweep) {
    double off = 0;
    for (long long p = 0; p < n; ++p)
      for (long long q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off < 1e-28) break;
    for (long long p = 0; p < n; ++p)
      for (long long q = p + 1; q < n; ++q) {
        const double apq = std::abs(a(p, q));
        if (apq < 1e-300) continue;
        const cxd phase = a(p, q) / apq;
        const double tau = (a(p, p).real() - a(q, q).real()) / (2.0 * apq);
        const double sgn = tau >= 0 ? 1.0 : -1.0;
        const double t = sgn / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cxd jpp(c, 0), jpq(-s, 0);
        const cxd jqp = s * std::conj(phase);
        const cxd jqq = c * std::conj(phase);
        for (long long i = 0; i < n; ++i) {
          const cxd ap = a(i, p), aq = a(i, q);
          a(i, p) = ap * jpp + aq * jqp;
          a(i, q) = ap * jpq + aq * jqq;
        }
        for (long long j = 0; j < n; ++j) {
          const cxd ap = a(p, j), aq = a(q, j);
          a(p, j) = std::conj(jpp) * ap + std::conj(jqp) * aq;
          a(q, j) = std::conj(jpq) * ap + std::conj(jqq) * aq;
        }
        for (long long i = 0; i < n; ++i) {
          const cxd vp = evecs(i, p), vq = evecs(i, q);
          evecs(i, p) = vp * jpp + vq * jqp;
          evecs(i, q) = vp * jpq + vq * jqq;
        }
      }
  }
  evals.resize(n);
  for (long long i = 0; i < n; ++i) evals[i] = a(i, i).real();
}

inline CMat matrix_sqrt_psd(const CMat& m) {
  RVec evals;
  CMat evecs;
  jacobi_hermitian(m, evals, evecs);
  const RVec r = evals.cwiseMax(0.0).cwiseSqrt();
  return evecs * r.asDiagonal() * evecs.adjoint();
}

inline double uhlmann(const CMat& a, const CMat& b) {
  const CMat ra = matrix_sqrt_psd(a);
  RVec evals;
  CMat evecs;
  jacobi_hermitian(ra * b * ra, evals, evecs);
  return evals.cwiseMax(0.0).cwiseSqrt().sum();
}

inline double superfidelity(const CMat& a, const CMat& b) {
  auto tr_prod = [](const CMat& x, const CMat& y) {
    cxd s = 0;
    for (long long i = 0; i < x.rows(); ++i)
      for (long long j = 0; j < x.cols(); ++j) s += x(i, j) * y(j, i);
    return s.real();
  };
  const double t = tr_prod(a, b);
  return t + std::sqrt(std::max(0.0, 1 - tr_prod(a, a)) * std::max(0.0, 1 - tr_prod(b, b)));
}

// --- random instances ---

inline CMat random_complex(qsgan::Rng& rng, long long rows, long long cols) {
  CMat m(rows, cols);
  for (long long j = 0; j < cols; ++j)
    for (long long i = 0; i < rows; ++i) m(i, j) = cxd(rng.normal(), rng.normal());
  return m;
}

inline qsgan::DensityMatrix random_density(qsgan::Rng& rng, int n_qubits, int rank = 0) {
  const long long d = 1LL << n_qubits;
  if (rank <= 0) rank = static_cast<int>(d);
  const CMat g = random_complex(rng, d, rank);
  CMat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return qsgan::DensityMatrix::from_matrix(std::move(rho));
}

inline qsgan::DensityMatrix random_pure(qsgan::Rng& rng, int n_qubits) {
  return random_density(rng, n_qubits, 1);
}

inline qsgan::ParamCircuit random_circuit(qsgan::Rng& rng, int n_qubits, int n_gates) {
  qsgan::ParamCircuit c;
  c.n_qubits = n_qubits;
  std::vector<double> params;
  for (int i = 0; i < n_gates; ++i) {
    if (n_qubits >= 2 && rng.uniform01() < 0.25) {
      const int a = static_cast<int>(rng.below(n_qubits));
      int b = static_cast<int>(rng.below(n_qubits - 1));
      if (b >= a) ++b;
      c.gates.push_back(qsgan::Gate::cnot(a, b));
    } else {
      const int t = static_cast<int>(rng.below(n_qubits));
      const auto kind = static_cast<qsgan::GateKind>(rng.below(3));
      qsgan::Gate g;
      g.kind = kind;
      g.target = t;
      g.param_index = static_cast<int>(params.size());
      params.push_back(rng.uniform(-M_PI, M_PI));
      c.gates.push_back(g);
    }
  }
  c.params = Eigen::Map<RVec>(params.data(), params.size());
  return c;
}

// --- gradient oracles ---

using ScalarFn = std::function<double(const RVec&)>;

inline RVec finite_diff_grads(const ScalarFn& fn, const RVec& params, double h) {
  RVec g(params.size());
  for (long long k = 0; k < params.size(); ++k) {
    RVec p = params;
    p[k] += h;
    const double up = fn(p);
    p[k] = params[k] - h;
    const double dn = fn(p);
    g[k] = (up - dn) / (2 * h);
  }
  return g;
}

inline RVec parameter_shift_grads(const ScalarFn& fn, const RVec& params) {
  RVec g(params.size());
  for (long long k = 0; k < params.size(); ++k) {
    RVec p = params;
    p[k] += M_PI / 2;
    const double up = fn(p);
    p[k] = params[k] - M_PI / 2;
    const double dn = fn(p);
    g[k] = (up - dn) / 2;
  }
  return g;
}

inline double max_abs_diff(const CMat& a, const CMat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace oracle
