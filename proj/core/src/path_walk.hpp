// Copyright 2026 The oqdyn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OQDYN_SRC_PATH_WALK_HPP
#define OQDYN_SRC_PATH_WALK_HPP

#include <span>
#include <utility>
#include <vector>

#include "oqdyn/types.hpp"

namespace oqdyn::detail {

// Depth-first walk over label paths p_0 -> p_1 -> ... -> p_l with every hop a
// structurally nonzero H1 element. Invokes leaf(path, product of elements)
// at each completed path. Counts node visits against the budget.
class SeriesPathWalker {
 public:
  SeriesPathWalker(const Matrix& h1, double tau, std::int64_t budget) : budget_(budget) {
    const Index n = h1.rows();
    adjacency_.resize(n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (std::abs(h1(i, j)) > tau) adjacency_[i].emplace_back(j, h1(i, j));
      }
    }
  }

  template <typename LeafFn>
  void run(int l, LeafFn&& leaf) {
    const Index n = static_cast<Index>(adjacency_.size());
    path_.assign(l + 1, 0);
    prod_.assign(l + 1, Complex(1.0, 0.0));
    for (Index p = 0; p < n; ++p) {
      path_[0] = p;
      prod_[0] = Complex(1.0, 0.0);
      descend(l, 0, leaf);
    }
  }

  std::int64_t visited() const { return visited_; }

 private:
  template <typename LeafFn>
  void descend(int l, int depth, LeafFn&& leaf) {
    for (const auto& [q, w] : adjacency_[path_[depth]]) {
      if (++visited_ > budget_) {
        throw BudgetError("path budget exceeded while enumerating series paths; use a "
                          "smaller system or a lower order");
      }
      path_[depth + 1] = q;
      prod_[depth + 1] = prod_[depth] * w;
      if (depth + 1 == l) {
        leaf(std::span<const Index>(path_.data(), static_cast<std::size_t>(l) + 1),
             prod_[l]);
      } else {
        descend(l, depth + 1, leaf);
      }
    }
  }

  std::vector<std::vector<std::pair<Index, Complex>>> adjacency_;
  std::vector<Index> path_;
  std::vector<Complex> prod_;
  std::int64_t visited_ = 0;
  std::int64_t budget_ = 0;
};

}  // namespace oqdyn::detail

#endif  // OQDYN_SRC_PATH_WALK_HPP
