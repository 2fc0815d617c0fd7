#include "qsgan/discriminator.hpp"

#include <cmath>

namespace qsgan {

std::vector<Gate> DiscBlock::circuit_a() const {
  std::vector<Gate> g = conv0;
  g.insert(g.end(), pool0.begin(), pool0.end());
  if (last) g.insert(g.end(), dense.begin(), dense.end());
  return g;
}

std::vector<Gate> DiscBlock::circuit_b() const {
  std::vector<Gate> g = conv_d;
  g.insert(g.end(), pool_d.begin(), pool_d.end());
  return g;
}

QuantumDiscriminator::QuantumDiscriminator(int max_qubits, Rng& rng) : max_qubits_(max_qubits) {
  if (max_qubits < 2 || max_qubits % 2 != 0)
    fail(ErrorKind::BadDimension, "discriminator needs an even qubit maximum >= 2");
  int offset = 0;
  for (int w = max_qubits; w >= 4; w -= 2) {
    DiscBlock b;
    b.width = w;
    const LayerSpec conv = quconv_layer_spec(w);
    const LayerSpec pool = qupool_layer_spec(w);
    b.conv0 = layer_gates(conv, offset);
    offset += conv.param_count;
    b.pool0 = layer_gates(pool, offset);
    offset += pool.param_count;
    b.blur_offset = offset;
    offset += kBlurParamCount;
    b.conv_d = layer_gates(conv, offset);
    offset += conv.param_count;
    b.pool_d = layer_gates(pool, offset);
    offset += pool.param_count;
    blocks_.push_back(std::move(b));
  }
  {
    DiscBlock b;
    b.width = 2;
    b.last = true;
    const LayerSpec conv = quconv_layer_spec(2);
    const LayerSpec pool = qupool_layer_spec(2);
    const LayerSpec dense = qudense_layer_spec(2);
    b.conv0 = layer_gates(conv, offset);
    offset += conv.param_count;
    b.pool0 = layer_gates(pool, offset);
    offset += pool.param_count;
    b.dense = layer_gates(dense, offset);
    offset += dense.param_count;
    blocks_.push_back(std::move(b));
  }
  params.resize(offset);
  for (int i = 0; i < offset; ++i) params[i] = rng.uniform(-M_PI / 4, M_PI / 4);
}

namespace {

CMat run_big_block(const DiscBlock& block, const RVec& params, const CMat& x_in,
                   DiscBlockCache* cache) {
  CMat x = x_in;
  conjugate_gates_inplace(x, block.circuit_a(), params);
  if (cache) cache->after_a = x;
  const RVec kernel = params.segment(block.blur_offset, kBlurParamCount);
  DensityMatrix evolved =
      blur_layer(wrap_unchecked(std::move(x)), kernel, cache ? &cache->blur : nullptr);
  x = std::move(evolved.mat());
  conjugate_gates_inplace(x, block.circuit_b(), params);
  if (cache) cache->pre_trace = x;
  return partial_trace_raw(x, block.width, top_qubits(block.width, 2));
}

double score_from_one_qubit(const CMat& one) { return one(0, 0).real() - one(1, 1).real(); }

}  // namespace

double QuantumDiscriminator::discriminate(const DensityMatrix& rho, int depth, double alpha,
                                          DiscCache* cache) const {
  if (depth < 1 || depth > n_blocks()) fail(ErrorKind::BadDepth, "discriminator depth out of range");
  if (rho.dim() != (1LL << entry_qubits(depth)))
    fail(ErrorKind::DimMismatch, "state does not match the entry qubit count");
  const int bstart = n_blocks() - depth;
  const bool faded = depth >= 2 && alpha < 1.0;
  if (cache) {
    cache->depth = depth;
    cache->alpha = alpha;
    cache->faded = faded;
    cache->big_blocks.clear();
  }
  CMat x = rho.mat();
  int bi = bstart;
  if (faded) {
    const CMat old = partial_trace_raw(x, entry_qubits(depth), top_qubits(entry_qubits(depth), 2));
    const CMat fresh = run_big_block(blocks_[bstart], params, x,
                                     cache ? &cache->big_blocks.emplace_back() : nullptr);
    x = (1.0 - alpha) * old + alpha * fresh;
    bi = bstart + 1;
  }
  for (; bi < n_blocks() - 1; ++bi)
    x = run_big_block(blocks_[bi], params, x,
                      cache ? &cache->big_blocks.emplace_back() : nullptr);
  conjugate_gates_inplace(x, blocks_.back().circuit_a(), params);
  if (cache) cache->last_pre_trace = x;
  const CMat one = partial_trace_raw(x, 2, {1});
  return score_from_one_qubit(one);
}

double QuantumDiscriminator::discriminate_inspected(const DensityMatrix& rho, int depth,
                                                    double alpha,
                                                    const Inspector& inspect) const {
  if (depth < 1 || depth > n_blocks()) fail(ErrorKind::BadDepth, "discriminator depth out of range");
  if (rho.dim() != (1LL << entry_qubits(depth)))
    fail(ErrorKind::DimMismatch, "state does not match the entry qubit count");
  const int bstart = n_blocks() - depth;
  const bool faded = depth >= 2 && alpha < 1.0;

  auto report = [&](const CMat& m, const std::string& tag) {
    inspect(wrap_unchecked(CMat(m)), tag);
  };
  auto run_block_layers = [&](const DiscBlock& b, CMat x) {
    const std::string w = std::to_string(b.width);
    conjugate_gates_inplace(x, b.conv0, params);
    report(x, "w" + w + ":conv0");
    conjugate_gates_inplace(x, b.pool0, params);
    report(x, "w" + w + ":pool0");
    if (!b.last) {
      const RVec kernel = params.segment(b.blur_offset, kBlurParamCount);
      x = blur_layer(wrap_unchecked(std::move(x)), kernel).mat();
      report(x, "w" + w + ":blur");
      conjugate_gates_inplace(x, b.conv_d, params);
      report(x, "w" + w + ":conv_d");
      conjugate_gates_inplace(x, b.pool_d, params);
      report(x, "w" + w + ":pool_d");
      x = partial_trace_raw(x, b.width, top_qubits(b.width, 2));
      report(x, "w" + w + ":trace");
    } else {
      conjugate_gates_inplace(x, b.dense, params);
      report(x, "w" + w + ":dense");
      x = partial_trace_raw(x, 2, {1});
      report(x, "w" + w + ":trace");
    }
    return x;
  };

  CMat x = rho.mat();
  int bi = bstart;
  if (faded) {
    CMat old = partial_trace_raw(x, entry_qubits(depth), top_qubits(entry_qubits(depth), 2));
    CMat fresh = run_block_layers(blocks_[bstart], x);
    x = (1.0 - alpha) * old + alpha * fresh;
    report(x, "fade-blend");
    bi = bstart + 1;
  }
  for (; bi < n_blocks(); ++bi) x = run_block_layers(blocks_[bi], x);
  return score_from_one_qubit(x);
}

namespace {

CMat big_block_backward(const DiscBlock& block, const RVec& params, const DiscBlockCache& bc,
                        const CMat& g_out, RVec& param_grads) {
  CMat g = partial_trace_adjoint(g_out, block.width, top_qubits(block.width, 2));
  CMat state = bc.pre_trace;
  gates_backward(block.circuit_b(), params, state, g, param_grads);
  const RVec kernel = params.segment(block.blur_offset, kBlurParamCount);
  g = blur_backward(bc.blur, kernel, g, param_grads.segment(block.blur_offset, kBlurParamCount));
  state = bc.after_a;
  gates_backward(block.circuit_a(), params, state, g, param_grads);
  return g;
}

}  // namespace

CMat QuantumDiscriminator::backward(const DiscCache& cache, double g_score,
                                    RVec& param_grads) const {
  CMat g = CMat::Zero(2, 2);
  g(0, 0) = g_score;
  g(1, 1) = -g_score;
  g = partial_trace_adjoint(g, 2, {1});
  CMat state = cache.last_pre_trace;
  gates_backward(blocks_.back().circuit_a(), params, state, g, param_grads);

  const int bstart = n_blocks() - cache.depth;
  const int applied = static_cast<int>(cache.big_blocks.size());
  const int first = cache.faded ? 1 : 0;
  for (int k = applied - 1; k >= first; --k) {
    const int bi = cache.faded ? bstart + k : bstart + k;
    g = big_block_backward(blocks_[bi], params, cache.big_blocks[k], g, param_grads);
  }
  if (cache.faded) {
    const int nq = entry_qubits(cache.depth);
    const CMat g_old = partial_trace_adjoint(CMat((1.0 - cache.alpha) * g), nq, top_qubits(nq, 2));
    const CMat g_new = cache.alpha * g;
    const CMat g_through =
        big_block_backward(blocks_[bstart], params, cache.big_blocks[0], g_new, param_grads);
    g = g_old + g_through;
  }
  return g;
}

// --- classical baseline ---

RMat avgpool4(const RMat& m) {
  RMat out = RMat::Zero(m.rows() / 4, m.cols() / 4);
  for (long long r = 0; r < m.rows(); ++r)
    for (long long c = 0; c < m.cols(); ++c) out(r / 4, c / 4) += m(r, c) / 16.0;
  return out;
}

namespace {

constexpr double kSlope = 0.2;

double lrelu(double x) { return x > 0 ? x : kSlope * x; }
double lrelu_grad(double x) { return x > 0 ? 1.0 : kSlope; }

Tensor lrelu_tensor(const Tensor& t) {
  Tensor out = t;
  for (long long i = 0; i < out.size(); ++i) out.data[i] = lrelu(out.data[i]);
  return out;
}

Tensor avgpool4_tensor(const Tensor& t) {
  Tensor out(t.ch, t.h / 4, t.w / 4);
  for (int c = 0; c < t.ch; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) out.at(c, y / 4, x / 4) += t.at(c, y, x) / 16.0;
  return out;
}

Tensor avgpool4_tensor_adjoint(const Tensor& g) {
  Tensor out(g.ch, g.h * 4, g.w * 4);
  for (int c = 0; c < g.ch; ++c)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) out.at(c, y, x) = g.at(c, y / 4, x / 4) / 16.0;
  return out;
}

Tensor apply_from_map(const FcLayer& fm, const RMat& map) {
  const int ch = static_cast<int>(fm.w.rows());
  Tensor out(ch, static_cast<int>(map.rows()), static_cast<int>(map.cols()));
  for (int c = 0; c < ch; ++c) {
    const double wv = fm.scale * fm.w(c, 0);
    double* p = out.plane(c);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x)
        p[static_cast<long long>(y) * out.w + x] = wv * map(y, x) + fm.b[c];
  }
  return out;
}

RMat from_map_backward(FcLayer& fm, const RMat& map, const Tensor& pre, const Tensor& g_out) {
  RMat g_map = RMat::Zero(map.rows(), map.cols());
  for (int c = 0; c < g_out.ch; ++c) {
    const double* gp = g_out.plane(c);
    const double* pp = pre.plane(c);
    const double wv = fm.scale * fm.w(c, 0);
    double gw = 0, gb = 0;
    for (int y = 0; y < g_out.h; ++y)
      for (int x = 0; x < g_out.w; ++x) {
        const long long i = static_cast<long long>(y) * g_out.w + x;
        const double g_pre = gp[i] * lrelu_grad(pp[i]);
        gw += g_pre * map(y, x);
        gb += g_pre;
        g_map(y, x) += wv * g_pre;
      }
    fm.gw(c, 0) += fm.scale * gw;
    fm.gb[c] += gb;
  }
  return g_map;
}

}  // namespace

ClassicalDiscriminator::ClassicalDiscriminator(int max_depth_, int channels_, Rng& rng)
    : channels(channels_), max_depth(max_depth_) {
  stages.resize(max_depth);
  for (ClassicalStage& s : stages) {
    s.from_map.init(channels, 1, 1.0, rng);
    s.conv.init(channels, channels, std::sqrt(2.0), rng);
  }
  head.init(1, channels * 16, 1.0, rng);
}

long long ClassicalDiscriminator::param_count() {
  long long n = 0;
  visit_params([&](double*, double*, long long k) { n += k; });
  return n;
}

void ClassicalDiscriminator::visit_params(const ParamVisitor& fn) {
  for (ClassicalStage& s : stages) {
    s.from_map.visit(fn);
    s.conv.visit(fn);
  }
  head.visit(fn);
}

void ClassicalDiscriminator::zero_grads() {
  visit_params([](double*, double* g, long long n) {
    for (long long i = 0; i < n; ++i) g[i] = 0.0;
  });
}

double ClassicalDiscriminator::discriminate(const RMat& map, int depth, double alpha,
                                            ClassicalCache* cache) const {
  if (depth < 1 || depth > max_depth) fail(ErrorKind::BadDepth, "depth out of range");
  if (map.rows() != (1LL << (2 * depth)) || map.cols() != map.rows())
    fail(ErrorKind::DimMismatch, "map side does not match depth");
  const bool faded = depth >= 2 && alpha < 1.0;
  if (cache) {
    *cache = {};
    cache->depth = depth;
    cache->alpha = alpha;
    cache->faded = faded;
    cache->input = map;
  }

  const int entry = depth - 1;
  Tensor pre = apply_from_map(stages[entry].from_map, map);
  if (cache) cache->entry_new_pre = pre;
  Tensor t = lrelu_tensor(pre);

  auto run_stage = [&](int k, Tensor x) {
    if (cache) cache->conv_in.push_back(x);
    Tensor conv_pre = stages[k].conv.forward(x);
    if (cache) cache->conv_pre.push_back(conv_pre);
    Tensor act = lrelu_tensor(conv_pre);
    return k > 0 ? avgpool4_tensor(act) : act;
  };

  t = run_stage(entry, std::move(t));
  if (faded) {
    const RMat pooled = avgpool4(map);
    Tensor old_pre = apply_from_map(stages[entry - 1].from_map, pooled);
    if (cache) {
      cache->pooled_input = pooled;
      cache->entry_old_pre = old_pre;
    }
    Tensor old_act = lrelu_tensor(old_pre);
    t.data = alpha * t.data + (1.0 - alpha) * old_act.data;
  }
  for (int k = entry - 1; k >= 0; --k) t = run_stage(k, std::move(t));

  RVec flat = t.data;
  if (cache) cache->head_in = flat;
  return head.forward(flat)[0];
}

RMat ClassicalDiscriminator::backward(const ClassicalCache& cache, double g_score) {
  RVec g1(1);
  g1 << g_score;
  RVec g_flat = head.backward(cache.head_in, g1);
  Tensor g(channels, 4, 4);
  g.data = g_flat;

  const int entry = cache.depth - 1;
  auto stage_backward = [&](int k, int conv_idx, Tensor gt) {
    if (k > 0) gt = avgpool4_tensor_adjoint(gt);
    const Tensor& pre = cache.conv_pre[conv_idx];
    Tensor g_pre = gt;
    for (long long i = 0; i < g_pre.size(); ++i) g_pre.data[i] *= lrelu_grad(pre.data[i]);
    return stages[k].conv.backward(cache.conv_in[conv_idx], g_pre);
  };

  // stages below the entry stage, in reverse application order
  int conv_idx = static_cast<int>(cache.conv_pre.size()) - 1;
  for (int k = 0; k <= entry - 1; ++k) {
    g = stage_backward(k, conv_idx, std::move(g));
    --conv_idx;
  }

  RMat g_map = RMat::Zero(cache.input.rows(), cache.input.cols());
  Tensor g_new = g;
  if (cache.faded) {
    for (long long i = 0; i < g_new.size(); ++i) g_new.data[i] *= cache.alpha;
    Tensor g_old = g;
    for (long long i = 0; i < g_old.size(); ++i) g_old.data[i] *= (1.0 - cache.alpha);
    const RMat g_pooled = from_map_backward(stages[entry - 1].from_map, cache.pooled_input,
                                            cache.entry_old_pre, g_old);
    for (long long r = 0; r < g_map.rows(); ++r)
      for (long long c = 0; c < g_map.cols(); ++c) g_map(r, c) += g_pooled(r / 4, c / 4) / 16.0;
  }
  Tensor g_entry_in = stage_backward(entry, conv_idx, std::move(g_new));
  g_map += from_map_backward(stages[entry].from_map, cache.input, cache.entry_new_pre, g_entry_in);
  return g_map;
}

}  // namespace qsgan
