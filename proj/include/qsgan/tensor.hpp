#pragma once

#include <Eigen/Dense>

#include "qsgan/error.hpp"

namespace qsgan {

// channel-major (c, y, x) tensor backed by one contiguous buffer
struct Tensor {
  int ch = 0, h = 0, w = 0;
  Eigen::VectorXd data;

  Tensor() = default;
  Tensor(int c_, int h_, int w_) : ch(c_), h(h_), w(w_), data(Eigen::VectorXd::Zero(static_cast<long long>(c_) * h_ * w_)) {}

  long long plane_size() const { return static_cast<long long>(h) * w; }
  long long size() const { return data.size(); }

  double& at(int c, int y, int x) { return data[(static_cast<long long>(c) * h + y) * w + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<long long>(c) * h + y) * w + x]; }

  double* plane(int c) { return data.data() + c * plane_size(); }
  const double* plane(int c) const { return data.data() + c * plane_size(); }

  bool empty() const { return data.size() == 0; }
};

}  // namespace qsgan
