#pragma once

#include "doctest.h"
#include "qmslab/lindblad.hpp"
#include "qmslab/random.hpp"

namespace qt {

using namespace qmslab;

inline Mat diag(std::initializer_list<double> v) {
  Mat D = Mat::Zero(v.size(), v.size());
  int k = 0;
  for (double x : v) D(k, k) = x, ++k;
  return D;
}

inline std::vector<Mat> random_kraus_channel(Rng& rng, int din, int dout, int n) {
  std::vector<Mat> K;
  Mat S = Mat::Zero(din, din);
  for (int k = 0; k < n; ++k) {
    K.push_back(ginibre(rng, dout, din));
    S += K.back().adjoint() * K.back();
  }
  const Mat Sm = pow_pd(S, -0.5);
  for (auto& k : K) k = k * Sm;
  return K;
}

}  // namespace qt
