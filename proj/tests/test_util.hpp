// Copyright 2026 The DMiner Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <random>

#include "dminer/core.hpp"

namespace dminer::testing {

inline Tensor3 random_tensor(std::mt19937_64& rng, int h, int w, int c, double lo = 0.0,
                             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor3 t(h, w, c);
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (double& v : m.data()) v = n(rng);
  return m;
}

inline Matrix unit_rows(Matrix m) {
  for (int r = 0; r < m.rows(); ++r) {
    const auto u = l2_normalize(m.row(r));
    std::copy(u.begin(), u.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace dminer::testing
