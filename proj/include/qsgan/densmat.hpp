#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsgan/error.hpp"

namespace qsgan {

using cxd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline bool is_power_of_two(long long x) { return x > 0 && (x & (x - 1)) == 0; }

// number of qubits for a power-of-two dimension, -1 otherwise
int qubit_count_for_dim(long long dim);

// Trace-1 Hermitian PSD matrix of dimension 2^n. Operations in this module
// produce valid states by construction; validity checks are diagnostics.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  // structural checks only (square, power-of-two side)
  static DensityMatrix from_matrix(CMat m);
  static DensityMatrix pure_basis(int n_qubits, long long index);
  static DensityMatrix maximally_mixed(int n_qubits);

  long long dim() const { return m_.rows(); }
  int n_qubits() const { return n_qubits_; }
  const CMat& mat() const { return m_; }
  CMat& mat() { return m_; }

  double hermiticity_error() const;
  double trace_error() const;
  double min_eigenvalue() const;
  bool is_valid(double tol = 1e-10) const;

 private:
  CMat m_;
  int n_qubits_ = 0;

  friend DensityMatrix wrap_unchecked(CMat m);
};

// internal fast path: caller guarantees m is a valid state of pow-2 dim
DensityMatrix wrap_unchecked(CMat m);

enum class GateKind { RX, RY, RZ, CNOT };

struct Gate {
  GateKind kind = GateKind::RX;
  int target = 0;
  int control = -1;      // CNOT only
  int param_index = -1;  // rotations only

  static Gate rx(int target, int param_index) { return {GateKind::RX, target, -1, param_index}; }
  static Gate ry(int target, int param_index) { return {GateKind::RY, target, -1, param_index}; }
  static Gate rz(int target, int param_index) { return {GateKind::RZ, target, -1, param_index}; }
  static Gate cnot(int control, int target) { return {GateKind::CNOT, target, control, -1}; }

  bool is_rotation() const { return kind != GateKind::CNOT; }
};

// Ordered gate list over n qubits with a shared parameter store (radians).
// Qubit 0 is the least significant index bit throughout the project.
struct ParamCircuit {
  int n_qubits = 0;
  std::vector<Gate> gates;
  RVec params;

  void validate() const;
};

void validate_gates(const std::vector<Gate>& gates, int n_qubits, long long n_params);

// --- encoding ---

// v / ||v|| as a rank-1 state
DensityMatrix encode_vector(const RVec& v);

// sqrt of the (negative-clamped) diagonal of m, then encode_vector
DensityMatrix encode_feature_map(const RMat& m);

// encode_vector followed by a partial trace of the low-order qubits (the
// fine index detail), keeping the top keep_qubits; bit-identical to
// composing the two operations
DensityMatrix encode_vector_traced(const RVec& v, int keep_qubits);

// --- gates and circuits ---

Eigen::Matrix2cd rotation_matrix(GateKind kind, double theta);
Eigen::Matrix2cd pauli_for(GateKind kind);  // rotation generator

// m -> u_full * m where u_full acts on `target` (identity elsewhere)
void left_mul_single(CMat& m, const Eigen::Matrix2cd& u, int target);
// m -> m * u_full
void right_mul_single(CMat& m, const Eigen::Matrix2cd& u, int target);
void left_mul_cnot(CMat& m, int control, int target);
void right_mul_cnot(CMat& m, int control, int target);

// m -> U m U† for a single gate
void conjugate_gate_inplace(CMat& m, const Gate& g, const RVec& params);
// m -> U m U† with U the ordered product over `gates`
void conjugate_gates_inplace(CMat& m, const std::vector<Gate>& gates, const RVec& params);
// inverse evolution: m -> U† m U
void unconjugate_gate_inplace(CMat& m, const Gate& g, const RVec& params);

CMat gate_unitary(const Gate& g, const RVec& params, int n_qubits);
CMat circuit_unitary(const ParamCircuit& c);
DensityMatrix apply_circuit(const DensityMatrix& rho, const ParamCircuit& c);

// --- partial trace ---

// reduced matrix over the kept qubits; `remove` must be a strict non-empty
// subset of 0..n_qubits-1
CMat partial_trace_raw(const CMat& m, int n_qubits, const std::vector<int>& remove);
DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& remove);
// adjoint of partial_trace under the Hilbert-Schmidt inner product: embeds a
// kept-qubit matrix back to the full space with identity on removed qubits
CMat partial_trace_adjoint(const CMat& kept, int n_qubits_full, const std::vector<int>& removed);

// convenience: trace away the `count` highest-index qubits
DensityMatrix trace_top_qubits(const DensityMatrix& rho, int count);
std::vector<int> top_qubits(int n_qubits, int count);

// (1-alpha) * a + alpha * b
DensityMatrix blend(const DensityMatrix& a, const DensityMatrix& b, double alpha);

// --- metrics ---

// Tr(ab) + sqrt((1 - Tr a^2)(1 - Tr b^2)), sqrt arguments clamped at 0,
// result clamped to [0, 1]
double superfidelity(const DensityMatrix& a, const DensityMatrix& b);
// Tr sqrt(sqrt(a) b sqrt(a)) via eigendecomposition, negative eigenvalues
// clamped at 0, result clamped to [0, 1]
double uhlmann_fidelity(const DensityMatrix& a, const DensityMatrix& b);

// Tr(rho Z) for a 1-qubit state
double expect_z(const DensityMatrix& rho);

// --- serialization (QDM1: magic, u32 dim, row-major re/im f64 pairs, LE) ---

void save_qdm(const std::string& path, const DensityMatrix& rho);
DensityMatrix load_qdm(const std::string& path);

}  // namespace qsgan
