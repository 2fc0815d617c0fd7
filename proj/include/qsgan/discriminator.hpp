#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsgan/generator.hpp"
#include "qsgan/qlayers.hpp"

namespace qsgan {

// One progressive stage of the quantum discriminator. Blocks at width >= 4
// run conv, pool, blur, conv, pool and then trace away the two highest
// qubits; the final 2-qubit block runs conv, pool, dense, traces to one qubit
// and measures Z.
struct DiscBlock {
  int width = 0;
  bool last = false;
  std::vector<Gate> conv0, pool0, conv_d, pool_d, dense;
  int blur_offset = -1;  // start of the 5 kernel parameters

  std::vector<Gate> circuit_a() const;  // conv0 + pool0
  std::vector<Gate> circuit_b() const;  // conv_d + pool_d (or conv0+pool0+dense when last)
};

struct DiscBlockCache {
  CMat after_a;
  BlurCache blur;
  CMat pre_trace;
};

struct DiscCache {
  int depth = 0;
  double alpha = 1.0;
  bool faded = false;
  std::vector<DiscBlockCache> big_blocks;  // active width>=4 blocks in run order
  CMat last_pre_trace;                     // 2-qubit state before the final trace
};

class QuantumDiscriminator {
 public:
  QuantumDiscriminator() = default;
  // blocks at widths max_qubits, max_qubits-2, ..., 2; parameters start
  // uniform in [-pi/4, pi/4]
  QuantumDiscriminator(int max_qubits, Rng& init_rng);

  int max_qubits() const { return max_qubits_; }
  int n_blocks() const { return static_cast<int>(blocks_.size()); }
  int entry_qubits(int depth) const { return 2 * depth; }
  long long param_count() const { return params.size(); }
  const std::vector<DiscBlock>& blocks() const { return blocks_; }

  // runs the `depth` smallest blocks; during fade-in the newest block's output
  // is blended with the partial trace of the input:
  // (1-alpha) * trace(rho) + alpha * block(rho)
  double discriminate(const DensityMatrix& rho, int depth, double alpha,
                      DiscCache* cache = nullptr) const;

  using Inspector = std::function<void(const DensityMatrix&, const std::string&)>;
  // same pass, reporting the state after every layer and trace
  double discriminate_inspected(const DensityMatrix& rho, int depth, double alpha,
                                const Inspector& inspect) const;

  // reverse pass from d(loss)/d(score); accumulates into param_grads and
  // returns the cotangent w.r.t. the input state
  CMat backward(const DiscCache& cache, double g_score, RVec& param_grads) const;

  RVec params;

 private:
  int max_qubits_ = 0;
  std::vector<DiscBlock> blocks_;  // largest first
};

// Desk-scale classical convolutional baseline: per-resolution 1->C entry
// convolutions, 3x3 conv stages with leaky-rectifier activations and 4x4
// average pooling down to a 4x4 head.
struct ClassicalStage {
  FcLayer from_map;  // 1x1 conv as a (C x 1) layer
  Conv3x3 conv;
};

struct ClassicalCache {
  int depth = 0;
  double alpha = 1.0;
  bool faded = false;
  RMat input;
  std::vector<Tensor> conv_in;   // input of each stage conv (entry resolution first)
  std::vector<Tensor> conv_pre;  // conv output before the activation
  Tensor entry_new_pre, entry_old_pre;  // from_map pre-activations
  RMat pooled_input;                    // input downscaled for the old entry path
  RVec head_in;
};

class ClassicalDiscriminator {
 public:
  ClassicalDiscriminator() = default;
  ClassicalDiscriminator(int max_depth, int channels, Rng& init_rng);

  long long param_count();
  double discriminate(const RMat& map, int depth, double alpha,
                      ClassicalCache* cache = nullptr) const;
  // returns the gradient w.r.t. the input map
  RMat backward(const ClassicalCache& cache, double g_score);

  void zero_grads();
  void visit_params(const ParamVisitor& fn);

  std::vector<ClassicalStage> stages;  // stages[k] runs at side 4^(k+1)
  FcLayer head;
  int channels = 0;
  int max_depth = 0;
};

// 4x4 average pooling used for classical progressive downscaling
RMat avgpool4(const RMat& m);

}  // namespace qsgan
