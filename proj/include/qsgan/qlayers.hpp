#pragma once

#include <utility>
#include <vector>

#include "qsgan/densmat.hpp"

namespace qsgan {

enum class LayerKind { QuConv, QuPool, QuDense, QuBlur };

// A parameterized layer template: a 2-qubit unit tiled over qubit pairs
// (conv/pool), per-qubit rotations plus a CNOT chain (dense), or the shared
// 5-parameter blur kernel.
struct LayerSpec {
  LayerKind kind = LayerKind::QuConv;
  int n_qubits = 0;
  int param_count = 0;
  std::vector<std::pair<int, int>> pairing;

  void validate() const;
};

inline constexpr int kQuConvUnitParams = 6;
inline constexpr int kQuPoolUnitParams = 4;
inline constexpr int kBlurParamCount = 5;

// RX,RY,RZ on a; RX,RY,RZ on b; CNOT(a -> b)
std::vector<Gate> quconv_unit(int a, int b, int param_offset);
// RX,RY on a; RX,RY on b; CNOT(b -> a): concentrates onto the kept qubit a
std::vector<Gate> qupool_unit(int a, int b, int param_offset);

// brickwork pairs (0,1),(2,3),... then (1,2),(3,4),...
LayerSpec quconv_layer_spec(int n_qubits);
// pools the to-be-traced top qubits onto the low ones: {(0,n-1),(1,n-2)},
// or {(0,1)} on the final 2-qubit block
LayerSpec qupool_layer_spec(int n_qubits);
// RX,RY,RZ per qubit, then CNOT chain 0->1->...->n-1
LayerSpec qudense_layer_spec(int n_qubits);
LayerSpec qublur_layer_spec(int n_qubits);

// gate list realizing a QuConv/QuPool/QuDense layer, parameters starting at
// param_offset
std::vector<Gate> layer_gates(const LayerSpec& spec, int param_offset);

// RX,RY on qubit 0; RX,RY on qubit 1; CNOT(0 -> 1); RZ on qubit 1
std::vector<Gate> blur_kernel_gates(int param_offset);

struct BlurKernel {
  ParamCircuit circuit;
  static BlurKernel from_params(const RVec& params5);
};

// dense layer applied to a state (params = 3 * n_qubits rotation angles)
DensityMatrix qudense_layer(const DensityMatrix& rho, const RVec& params);

// --- differentiable feature-map encoding ---

// Cotangent convention used for all complex backward passes in this project:
// g(i,j) = dL/dRe(x(i,j)) + i * dL/dIm(x(i,j)), so dL = Re Tr(g† dx).
struct EncodeCache {
  RVec diag;       // raw diagonal
  RVec amp;        // sqrt of the clamped diagonal
  double sq_norm = 0.0;
  bool degenerate = false;
  long long dim = 0;
};

// encode_feature_map with an optional cache for the backward pass; when
// fallback is set a non-positive diagonal yields the maximally mixed state
// instead of a ZeroVector error
DensityMatrix encode_feature_map_cached(const RMat& m, EncodeCache* cache, bool fallback);

// gradient w.r.t. the map's diagonal (everything off-diagonal is unused)
RVec encode_feature_map_backward(const EncodeCache& cache, const CMat& g_out);

// --- quantum-inspired blur convolution ---

struct BlurCache {
  long long side = 0;
  std::vector<EncodeCache> tile_encodes;  // diagonal tiles only
  std::vector<CMat> tile_evolved;         // evolved diagonal-tile states
  EncodeCache final_encode;
};

// partition the real part of rho into 4x4 tiles, encode each as a 2-qubit
// state, evolve every tile with the shared kernel, write the evolved states
// back and re-encode the assembled map
DensityMatrix blur_layer(const DensityMatrix& rho, const RVec& kernel_params,
                         BlurCache* cache = nullptr);

// accumulates the 5 kernel gradients and returns the input-state cotangent
CMat blur_backward(const BlurCache& cache, const RVec& kernel_params, const CMat& g_out,
                   Eigen::Ref<RVec> kernel_grads);

// --- reverse mode over unitary gate segments ---

// Walks the segment backward. On entry `rho` and `g` hold the segment's output
// state and cotangent; on exit they hold the input state and cotangent.
// Rotation-parameter gradients accumulate into param_grads (indexed by
// param_index). Unitary inversion makes this O(1) in stored states.
void gates_backward(const std::vector<Gate>& gates, const RVec& params, CMat& rho, CMat& g,
                    Eigen::Ref<RVec> param_grads);

// reverse-mode gradient of Tr(observable · U rho U†) for a Hermitian
// observable w.r.t. every circuit parameter
RVec quantum_grads(const ParamCircuit& c, const DensityMatrix& rho_in, const CMat& observable);

}  // namespace qsgan
