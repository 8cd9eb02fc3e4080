// Copyright 2026 The CLNR Authors.
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

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "clnr/errors.hpp"

namespace clnr {

/// Dense row-major matrix. Every value in the library (features, weights,
/// embeddings, scalars as 1x1) is one of these.
template <class T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
std::string shape_of(const Tensor<T>& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

template <class T>
bool all_finite(const Tensor<T>& t) {
  return t.allFinite();
}

template <class T>
Tensor<T> scalar_tensor(T v) {
  Tensor<T> t(1, 1);
  t(0, 0) = v;
  return t;
}

template <class To, class From>
Tensor<To> cast_tensor(const Tensor<From>& t) {
  return t.template cast<To>();
}

/// Compressed sparse row matrix.
///
/// offsets has rows+1 nondecreasing entries; the column indices of row i are
/// indices[offsets[i] .. offsets[i+1]) and are kept sorted within a row.
template <class T>
struct SparseMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<std::int64_t> offsets{0};
  std::vector<std::int64_t> indices;
  std::vector<T> values;

  std::int64_t nnz() const { return static_cast<std::int64_t>(indices.size()); }

  T at(std::int64_t r, std::int64_t c) const {
    auto first = indices.begin() + offsets[r];
    auto last = indices.begin() + offsets[r + 1];
    auto it = std::lower_bound(first, last, c);
    if (it != last && *it == c) return values[static_cast<std::size_t>(it - indices.begin())];
    return T(0);
  }

  bool has(std::int64_t r, std::int64_t c) const {
    auto first = indices.begin() + offsets[r];
    auto last = indices.begin() + offsets[r + 1];
    return std::binary_search(first, last, c);
  }

  static SparseMatrix identity(std::int64_t n) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.offsets.resize(static_cast<std::size_t>(n) + 1);
    m.indices.resize(static_cast<std::size_t>(n));
    m.values.assign(static_cast<std::size_t>(n), T(1));
    for (std::int64_t i = 0; i <= n; ++i) m.offsets[i] = i;
    for (std::int64_t i = 0; i < n; ++i) m.indices[i] = i;
    return m;
  }

  /// Builds from (row, col, value) triplets. Duplicates are merged by keeping
  /// the first value.
  static SparseMatrix from_triplets(std::int64_t rows, std::int64_t cols,
                                    std::vector<std::tuple<std::int64_t, std::int64_t, T>> trips) {
    for (const auto& [r, c, v] : trips) {
      if (r < 0 || r >= rows || c < 0 || c >= cols)
        throw ShapeError("sparse triplet (" + std::to_string(r) + "," + std::to_string(c) +
                         ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    std::stable_sort(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
      return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.offsets.assign(static_cast<std::size_t>(rows) + 1, 0);
    std::int64_t last_r = -1, last_c = -1;
    for (const auto& [r, c, v] : trips) {
      if (r == last_r && c == last_c) continue;
      m.indices.push_back(c);
      m.values.push_back(v);
      ++m.offsets[static_cast<std::size_t>(r) + 1];
      last_r = r;
      last_c = c;
    }
    for (std::size_t i = 1; i < m.offsets.size(); ++i) m.offsets[i] += m.offsets[i - 1];
    return m;
  }

  Tensor<T> to_dense() const {
    Tensor<T> d = Tensor<T>::Zero(rows, cols);
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t k = offsets[r]; k < offsets[r + 1]; ++k) d(r, indices[k]) = values[k];
    return d;
  }

  bool is_symmetric() const {
    if (rows != cols) return false;
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t k = offsets[r]; k < offsets[r + 1]; ++k)
        if (!has(indices[k], r) || at(indices[k], r) != values[k]) return false;
    return true;
  }

  SparseMatrix transpose() const {
    std::vector<std::tuple<std::int64_t, std::int64_t, T>> trips;
    trips.reserve(indices.size());
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t k = offsets[r]; k < offsets[r + 1]; ++k)
        trips.emplace_back(indices[k], r, values[k]);
    return from_triplets(cols, rows, std::move(trips));
  }

  template <class U>
  SparseMatrix<U> cast() const {
    SparseMatrix<U> out;
    out.rows = rows;
    out.cols = cols;
    out.offsets = offsets;
    out.indices = indices;
    out.values.assign(values.begin(), values.end());
    return out;
  }
};

/// y = a * x for CSR a and dense x.
template <class T>
Tensor<T> sparse_dense_product(const SparseMatrix<T>& a, const Tensor<T>& x) {
  if (a.cols != x.rows())
    throw ShapeError("spmm: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) + " times " +
                     shape_of(x));
  Tensor<T> y = Tensor<T>::Zero(a.rows, x.cols());
  for (std::int64_t r = 0; r < a.rows; ++r) {
    for (std::int64_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
      y.row(r).noalias() += a.values[k] * x.row(a.indices[k]);
  }
  return y;
}

}  // namespace clnr
