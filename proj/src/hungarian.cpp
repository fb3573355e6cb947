// Copyright 2026 The Panolabel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "panolabel/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panolabel/core.hpp"

namespace panolabel {

namespace {

// Rows <= cols. Classic potentials formulation, 1-based with a virtual
// column 0.
std::vector<std::size_t> assign_rows(const CostMatrix& a) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> solve_assignment(const CostMatrix& cost) {
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) {
      if (!std::isfinite(cost(r, c))) throw Error("assignment costs must be finite");
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;
  if (cost.rows() <= cost.cols()) {
    const auto cols = assign_rows(cost);
    for (std::size_t r = 0; r < cols.size(); ++r) out.emplace_back(r, cols[r]);
    return out;
  }
  CostMatrix t(cost.cols(), cost.rows());
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    for (std::size_t c = 0; c < cost.cols(); ++c) t(c, r) = cost(r, c);
  }
  const auto rows = assign_rows(t);
  for (std::size_t c = 0; c < rows.size(); ++c) out.emplace_back(rows[c], c);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace panolabel
