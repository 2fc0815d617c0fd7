#include "qsgan/densmat.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace qsgan {

int qubit_count_for_dim(long long dim) {
  if (!is_power_of_two(dim)) return -1;
  int n = 0;
  while ((1LL << n) < dim) ++n;
  return n;
}

DensityMatrix wrap_unchecked(CMat m) {
  DensityMatrix rho;
  rho.n_qubits_ = qubit_count_for_dim(m.rows());
  rho.m_ = std::move(m);
  return rho;
}

DensityMatrix DensityMatrix::from_matrix(CMat m) {
  if (m.rows() != m.cols() || !is_power_of_two(m.rows()))
    fail(ErrorKind::BadDimension, "density matrix must be square with power-of-two side, got " +
                                      std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  return wrap_unchecked(std::move(m));
}

DensityMatrix DensityMatrix::pure_basis(int n_qubits, long long index) {
  const long long d = 1LL << n_qubits;
  if (index < 0 || index >= d) fail(ErrorKind::BadDimension, "basis index out of range");
  CMat m = CMat::Zero(d, d);
  m(index, index) = 1.0;
  return wrap_unchecked(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  const long long d = 1LL << n_qubits;
  CMat m = CMat::Identity(d, d) / static_cast<double>(d);
  return wrap_unchecked(std::move(m));
}

double DensityMatrix::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::trace_error() const { return std::abs(m_.trace() - cxd(1.0, 0.0)); }

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMat> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool DensityMatrix::is_valid(double tol) const {
  if (m_.rows() == 0) return false;
  return hermiticity_error() <= tol && trace_error() <= tol && min_eigenvalue() >= -tol;
}

void validate_gates(const std::vector<Gate>& gates, int n_qubits, long long n_params) {
  for (const Gate& g : gates) {
    if (g.target < 0 || g.target >= n_qubits)
      fail(ErrorKind::BadQubitSet, "gate target out of range");
    if (g.is_rotation()) {
      if (g.control != -1) fail(ErrorKind::BadQubitSet, "rotation gate cannot have a control");
      if (g.param_index < 0 || g.param_index >= n_params)
        fail(ErrorKind::BadLength, "rotation gate parameter index out of range");
    } else {
      if (g.param_index != -1) fail(ErrorKind::BadLength, "CNOT carries no parameter");
      if (g.control < 0 || g.control >= n_qubits || g.control == g.target)
        fail(ErrorKind::BadQubitSet, "CNOT control invalid");
    }
  }
}

void ParamCircuit::validate() const { validate_gates(gates, n_qubits, params.size()); }

// --- encoding ---

DensityMatrix encode_vector(const RVec& v) {
  if (!is_power_of_two(v.size()))
    fail(ErrorKind::BadLength, "encode_vector length must be a power of two, got " +
                                   std::to_string(v.size()));
  const double norm = v.norm();
  if (norm == 0.0) fail(ErrorKind::ZeroVector, "encode_vector of all-zero vector");
  const RVec u = v / norm;
  CMat m = (u * u.transpose()).cast<cxd>();
  return wrap_unchecked(std::move(m));
}

DensityMatrix encode_feature_map(const RMat& m) {
  if (m.rows() != m.cols() || !is_power_of_two(m.rows()))
    fail(ErrorKind::BadLength, "feature map must be square with power-of-two side");
  RVec v = m.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (v.isZero(0.0)) fail(ErrorKind::ZeroVector, "feature map diagonal is non-positive everywhere");
  return encode_vector(v);
}

// Keeps the highest-index qubits: adjacent vector entries share all high bits,
// so this merges neighbouring loci the way average pooling merges adjacent
// pixels, and it inverts the generator's nearest-neighbour upsampling ladder.
DensityMatrix encode_vector_traced(const RVec& v, int keep_qubits) {
  const int n = qubit_count_for_dim(v.size());
  if (n < 0) fail(ErrorKind::BadLength, "encode_vector_traced length must be a power of two");
  if (keep_qubits < 1 || keep_qubits > n)
    fail(ErrorKind::BadQubitSet, "keep_qubits out of range");
  const double norm = v.norm();
  if (norm == 0.0) fail(ErrorKind::ZeroVector, "encode_vector_traced of all-zero vector");
  const RVec u = v / norm;
  const long long dk = 1LL << keep_qubits;
  const long long lo_count = 1LL << (n - keep_qubits);
  CMat out = CMat::Zero(dk, dk);
  for (long long b = 0; b < dk; ++b)
    for (long long a = 0; a < dk; ++a) {
      double s = 0.0;
      for (long long lo = 0; lo < lo_count; ++lo) s += u[a * lo_count + lo] * u[b * lo_count + lo];
      out(a, b) = s;
    }
  return wrap_unchecked(std::move(out));
}

// --- gates ---

Eigen::Matrix2cd rotation_matrix(GateKind kind, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Eigen::Matrix2cd u;
  switch (kind) {
    case GateKind::RX:
      u << cxd(c, 0), cxd(0, -s), cxd(0, -s), cxd(c, 0);
      break;
    case GateKind::RY:
      u << cxd(c, 0), cxd(-s, 0), cxd(s, 0), cxd(c, 0);
      break;
    case GateKind::RZ:
      u << cxd(c, -s), cxd(0, 0), cxd(0, 0), cxd(c, s);
      break;
    default:
      fail(ErrorKind::BadShape, "rotation_matrix on CNOT");
  }
  return u;
}

Eigen::Matrix2cd pauli_for(GateKind kind) {
  Eigen::Matrix2cd p;
  switch (kind) {
    case GateKind::RX:
      p << cxd(0, 0), cxd(1, 0), cxd(1, 0), cxd(0, 0);
      break;
    case GateKind::RY:
      p << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0);
      break;
    case GateKind::RZ:
      p << cxd(1, 0), cxd(0, 0), cxd(0, 0), cxd(-1, 0);
      break;
    default:
      fail(ErrorKind::BadShape, "pauli_for on CNOT");
  }
  return p;
}

void left_mul_single(CMat& m, const Eigen::Matrix2cd& u, int target) {
  const long long n = m.rows();
  const long long stride = 1LL << target;
  const cxd u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  for (long long j = 0; j < m.cols(); ++j) {
    cxd* col = m.col(j).data();
    for (long long base = 0; base < n; base += 2 * stride)
      for (long long lo = 0; lo < stride; ++lo) {
        const cxd a = col[base + lo];
        const cxd b = col[base + lo + stride];
        col[base + lo] = u00 * a + u01 * b;
        col[base + lo + stride] = u10 * a + u11 * b;
      }
  }
}

void right_mul_single(CMat& m, const Eigen::Matrix2cd& u, int target) {
  const long long n = m.cols();
  const long long stride = 1LL << target;
  const cxd u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  CVec tmp(m.rows());
  for (long long base = 0; base < n; base += 2 * stride)
    for (long long lo = 0; lo < stride; ++lo) {
      const long long j0 = base + lo;
      const long long j1 = j0 + stride;
      tmp = m.col(j0);
      m.col(j0) = tmp * u00 + m.col(j1) * u10;
      m.col(j1) = tmp * u01 + m.col(j1) * u11;
    }
}

void left_mul_cnot(CMat& m, int control, int target) {
  const long long n = m.rows();
  const long long cm = 1LL << control;
  const long long tm = 1LL << target;
  for (long long i = 0; i < n; ++i)
    if ((i & cm) != 0 && (i & tm) == 0) m.row(i).swap(m.row(i | tm));
}

void right_mul_cnot(CMat& m, int control, int target) {
  const long long n = m.cols();
  const long long cm = 1LL << control;
  const long long tm = 1LL << target;
  for (long long j = 0; j < n; ++j)
    if ((j & cm) != 0 && (j & tm) == 0) m.col(j).swap(m.col(j | tm));
}

void conjugate_gate_inplace(CMat& m, const Gate& g, const RVec& params) {
  if (g.is_rotation()) {
    const Eigen::Matrix2cd u = rotation_matrix(g.kind, params[g.param_index]);
    left_mul_single(m, u, g.target);
    right_mul_single(m, u.adjoint(), g.target);
  } else {
    left_mul_cnot(m, g.control, g.target);
    right_mul_cnot(m, g.control, g.target);
  }
}

void unconjugate_gate_inplace(CMat& m, const Gate& g, const RVec& params) {
  if (g.is_rotation()) {
    const Eigen::Matrix2cd u = rotation_matrix(g.kind, -params[g.param_index]);
    left_mul_single(m, u, g.target);
    right_mul_single(m, u.adjoint(), g.target);
  } else {
    conjugate_gate_inplace(m, g, params);  // CNOT is an involution
  }
}

void conjugate_gates_inplace(CMat& m, const std::vector<Gate>& gates, const RVec& params) {
  for (const Gate& g : gates) conjugate_gate_inplace(m, g, params);
}

CMat gate_unitary(const Gate& g, const RVec& params, int n_qubits) {
  validate_gates({g}, n_qubits, params.size());
  const long long d = 1LL << n_qubits;
  CMat u = CMat::Identity(d, d);
  if (g.is_rotation())
    left_mul_single(u, rotation_matrix(g.kind, params[g.param_index]), g.target);
  else
    left_mul_cnot(u, g.control, g.target);
  return u;
}

CMat circuit_unitary(const ParamCircuit& c) {
  c.validate();
  const long long d = 1LL << c.n_qubits;
  CMat u = CMat::Identity(d, d);
  for (const Gate& g : c.gates) {
    if (g.is_rotation())
      left_mul_single(u, rotation_matrix(g.kind, c.params[g.param_index]), g.target);
    else
      left_mul_cnot(u, g.control, g.target);
  }
  return u;
}

DensityMatrix apply_circuit(const DensityMatrix& rho, const ParamCircuit& c) {
  c.validate();
  if (rho.dim() != (1LL << c.n_qubits))
    fail(ErrorKind::DimMismatch, "state dimension does not match circuit qubit count");
  CMat m = rho.mat();
  conjugate_gates_inplace(m, c.gates, c.params);
  return wrap_unchecked(std::move(m));
}

// --- partial trace ---

namespace {

struct Split {
  std::vector<int> keep;
  std::vector<long long> keep_offsets;    // scattered kept-index bits
  std::vector<long long> remove_offsets;  // scattered removed-index bits
};

Split make_split(int n_qubits, const std::vector<int>& remove) {
  if (remove.empty()) fail(ErrorKind::BadQubitSet, "empty removal set");
  std::vector<int> rem = remove;
  std::sort(rem.begin(), rem.end());
  if (std::adjacent_find(rem.begin(), rem.end()) != rem.end())
    fail(ErrorKind::BadQubitSet, "duplicate qubit in removal set");
  if (rem.front() < 0 || rem.back() >= n_qubits)
    fail(ErrorKind::BadQubitSet, "removal qubit out of range");
  if (static_cast<int>(rem.size()) >= n_qubits)
    fail(ErrorKind::BadQubitSet, "cannot trace out every qubit");

  Split s;
  for (int q = 0; q < n_qubits; ++q)
    if (!std::binary_search(rem.begin(), rem.end(), q)) s.keep.push_back(q);

  const long long nk = 1LL << s.keep.size();
  const long long nr = 1LL << rem.size();
  s.keep_offsets.resize(nk);
  for (long long a = 0; a < nk; ++a) {
    long long idx = 0;
    for (size_t b = 0; b < s.keep.size(); ++b)
      if ((a >> b) & 1) idx |= 1LL << s.keep[b];
    s.keep_offsets[a] = idx;
  }
  s.remove_offsets.resize(nr);
  for (long long r = 0; r < nr; ++r) {
    long long idx = 0;
    for (size_t b = 0; b < rem.size(); ++b)
      if ((r >> b) & 1) idx |= 1LL << rem[b];
    s.remove_offsets[r] = idx;
  }
  return s;
}

}  // namespace

CMat partial_trace_raw(const CMat& m, int n_qubits, const std::vector<int>& remove) {
  if (m.rows() != m.cols() || m.rows() != (1LL << n_qubits))
    fail(ErrorKind::DimMismatch, "matrix dimension does not match qubit count");
  const Split s = make_split(n_qubits, remove);
  const long long nk = static_cast<long long>(s.keep_offsets.size());
  CMat out = CMat::Zero(nk, nk);
  for (long long b = 0; b < nk; ++b)
    for (long long a = 0; a < nk; ++a) {
      cxd sum = 0.0;
      for (const long long off : s.remove_offsets)
        sum += m(s.keep_offsets[a] + off, s.keep_offsets[b] + off);
      out(a, b) = sum;
    }
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& remove) {
  return wrap_unchecked(partial_trace_raw(rho.mat(), rho.n_qubits(), remove));
}

CMat partial_trace_adjoint(const CMat& kept, int n_qubits_full, const std::vector<int>& removed) {
  const Split s = make_split(n_qubits_full, removed);
  const long long nk = static_cast<long long>(s.keep_offsets.size());
  if (kept.rows() != nk || kept.cols() != nk)
    fail(ErrorKind::DimMismatch, "kept matrix dimension mismatch");
  const long long d = 1LL << n_qubits_full;
  CMat out = CMat::Zero(d, d);
  for (long long b = 0; b < nk; ++b)
    for (long long a = 0; a < nk; ++a) {
      const cxd v = kept(a, b);
      for (const long long off : s.remove_offsets)
        out(s.keep_offsets[a] + off, s.keep_offsets[b] + off) = v;
    }
  return out;
}

std::vector<int> top_qubits(int n_qubits, int count) {
  std::vector<int> qs;
  for (int q = n_qubits - count; q < n_qubits; ++q) qs.push_back(q);
  return qs;
}

DensityMatrix trace_top_qubits(const DensityMatrix& rho, int count) {
  return partial_trace(rho, top_qubits(rho.n_qubits(), count));
}

DensityMatrix blend(const DensityMatrix& a, const DensityMatrix& b, double alpha) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimMismatch, "blend of unequal dimensions");
  return wrap_unchecked((1.0 - alpha) * a.mat() + alpha * b.mat());
}

// --- metrics ---

namespace {

double product_trace_real(const CMat& a, const CMat& b) {
  // Tr(ab) = sum_ij a_ij b_ji
  return (a.transpose().cwiseProduct(b)).sum().real();
}

}  // namespace

double superfidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimMismatch, "superfidelity of unequal dimensions");
  const double overlap = product_trace_real(a.mat(), b.mat());
  const double pa = std::max(0.0, 1.0 - product_trace_real(a.mat(), a.mat()));
  const double pb = std::max(0.0, 1.0 - product_trace_real(b.mat(), b.mat()));
  const double f = overlap + std::sqrt(pa * pb);
  return std::clamp(f, 0.0, 1.0);
}

double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::DimMismatch, "uhlmann_fidelity of unequal dimensions");
  // eigenvalues below the noise floor are exact zeros of the trace-1 state;
  // keeping them would leak sqrt(eps) terms into the trace
  const auto denoise = [](double x) { return x < 1e-12 ? 0.0 : x; };
  Eigen::SelfAdjointEigenSolver<CMat> es(a.mat());
  const RVec lam = es.eigenvalues().unaryExpr(denoise).cwiseSqrt();
  const CMat sqrt_a = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  const CMat inner = sqrt_a * b.mat() * sqrt_a;
  Eigen::SelfAdjointEigenSolver<CMat> es2(inner, Eigen::EigenvaluesOnly);
  const double f = es2.eigenvalues().unaryExpr(denoise).cwiseSqrt().sum();
  return std::clamp(f, 0.0, 1.0);
}

double expect_z(const DensityMatrix& rho) {
  if (rho.dim() != 2) fail(ErrorKind::DimMismatch, "expect_z needs a 1-qubit state");
  return rho.mat()(0, 0).real() - rho.mat()(1, 1).real();
}

// --- serialization ---

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void save_qdm(const std::string& path, const DensityMatrix& rho) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot open " + path + " for writing");
  os.write("QDM1", 4);
  put_u32(os, static_cast<std::uint32_t>(rho.dim()));
  const long long d = rho.dim();
  for (long long i = 0; i < d; ++i)
    for (long long j = 0; j < d; ++j) {
      const cxd v = rho.mat()(i, j);
      const double re = v.real(), im = v.imag();
      os.write(reinterpret_cast<const char*>(&re), 8);
      os.write(reinterpret_cast<const char*>(&im), 8);
    }
  if (!os) fail(ErrorKind::Io, "write failed for " + path);
}

DensityMatrix load_qdm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "QDM1", 4) != 0) fail(ErrorKind::Io, "bad QDM1 magic in " + path);
  const std::uint32_t d = get_u32(is);
  if (!is || !is_power_of_two(d)) fail(ErrorKind::Io, "bad QDM1 dimension in " + path);
  CMat m(d, d);
  for (std::uint32_t i = 0; i < d; ++i)
    for (std::uint32_t j = 0; j < d; ++j) {
      double re = 0, im = 0;
      is.read(reinterpret_cast<char*>(&re), 8);
      is.read(reinterpret_cast<char*>(&im), 8);
      m(i, j) = cxd(re, im);
    }
  if (!is) fail(ErrorKind::Io, "truncated QDM1 file " + path);
  return DensityMatrix::from_matrix(std::move(m));
}

}  // namespace qsgan
