#pragma once

#include <functional>
#include <vector>

#include "qsgan/densmat.hpp"
#include "qsgan/rng.hpp"
#include "qsgan/tensor.hpp"

namespace qsgan {

// visitor over (value, grad) parameter blocks, fixed project-wide order
using ParamVisitor = std::function<void(double*, double*, long long)>;

// fully connected layer under the equalized learning-rate convention:
// weights stored unit-normal, rescaled by `scale` at run time
struct FcLayer {
  RMat w, gw;
  RVec b, gb;
  double scale = 1.0;

  void init(int out, int in, double gain, Rng& rng);
  RVec forward(const RVec& x) const;
  // g_out -> g_in, accumulating parameter grads
  RVec backward(const RVec& x_in, const RVec& g_out);
  void visit(const ParamVisitor& fn);
};

struct Conv3x3 {
  int cin = 0, cout = 0;
  RMat w, gw;  // cout x (cin*9)
  RVec b, gb;
  double scale = 1.0;

  void init(int cout_, int cin_, double gain, Rng& rng);
  Tensor forward(const Tensor& x) const;
  Tensor backward(const Tensor& x_in, const Tensor& g_out);
  void visit(const ParamVisitor& fn);
};

struct GeneratorConfig {
  int latent_dim = 64;
  int style_dim = 64;
  int channels = 8;
  int max_depth = 5;  // block k emits a 4^k-sided map
  bool noise = true;

  long long side_at(int depth) const { return 1LL << (2 * depth); }
};

// conv -> per-pixel noise -> leaky rectifier -> AdaIN
struct SynthLayerCache {
  Tensor x_in;
  Tensor pre_act;  // conv + bias + noise
  RMat noise;      // shared-plane noise field, empty when disabled
  RVec mu, sigma, ys, yb;
};

struct SynthCache {
  int depth = 0;
  double alpha = 1.0;
  std::vector<RVec> styles;             // per-block style vector
  std::vector<SynthLayerCache> layers;  // two per block
  std::vector<Tensor> block_out;        // AdaIN output of each block's second layer
};

struct MapCache {
  RVec z;
  std::vector<RVec> inputs;    // input of each layer
  std::vector<RVec> pre_acts;  // pre-activation of each layer
};

// one synthesis block: two 3x3 convolutions, each with style-driven AdaIN and
// optional noise, plus the block's single-channel projection head
struct SynthBlock {
  Conv3x3 conv1, conv2;
  FcLayer style1, style2;  // style vector -> (scale, bias) per channel
  RVec noise1_w, noise1_gw, noise2_w, noise2_gw;
  RVec tomap_w, tomap_gw;  // 1x1 projection to the single-channel map
  double tomap_b = 0.0, tomap_gb = 0.0;
  double tomap_scale = 1.0;

  void visit(const ParamVisitor& fn);
};

// per-layer noise planes for a forward pass (2 per block); empty planes mean
// noise off for that layer
using NoiseFields = std::vector<RMat>;

class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, Rng& init_rng);

  const GeneratorConfig& config() const { return cfg_; }

  // deterministic 8-layer mapping pass
  RVec map_latent(const RVec& z) const;
  RVec map_latent_cached(const RVec& z, MapCache& cache) const;
  // g_w -> g_z, accumulating mapping parameter grads
  RVec map_backward(const MapCache& cache, const RVec& g_w);

  // progressive synthesis with per-block styles; during fade-in the output is
  // (1 - alpha) * upsample(previous head) + alpha * (current head)
  RMat synthesize_with_styles(const std::vector<RVec>& styles, int depth, double alpha,
                              const NoiseFields* noise, SynthCache* cache) const;
  RMat synthesize(const RVec& w, int depth, double alpha, const NoiseFields* noise = nullptr,
                  SynthCache* cache = nullptr) const;
  // returns the gradient w.r.t. each block's style vector
  std::vector<RVec> synthesize_backward(const SynthCache& cache, const RMat& g_map);

  // full pipeline from a latent; noise sampled from rng when enabled
  RMat generate(const RVec& z, int depth, double alpha, Rng* noise_rng = nullptr,
                SynthCache* synth_cache = nullptr, MapCache* map_cache = nullptr) const;

  // blocks before `crossover` (1-based) take styles from z1, the rest from z2
  RMat style_mix(const RVec& z1, const RVec& z2, int crossover, int depth, double alpha,
                 Rng* noise_rng = nullptr) const;

  NoiseFields sample_noise(int depth, Rng& rng) const;

  void zero_grads();
  void visit_params(const ParamVisitor& fn);
  long long param_count();

  // exposed for tests and serialization
  std::vector<FcLayer> mapping;
  Tensor constant, constant_g;
  std::vector<SynthBlock> blocks;

 private:
  GeneratorConfig cfg_;
};

}  // namespace qsgan
