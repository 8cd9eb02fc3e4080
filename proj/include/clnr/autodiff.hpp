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

/**
 * @file autodiff.hpp
 * @brief Reverse-mode differentiation over dense matrices.
 *
 * A Tape records every operation applied to Var handles. backward() walks
 * the records in exact reverse order and accumulates gradients. Each
 * primitive carries a hand-written backward pass; grad_check() compares any
 * tape-built scalar against central differences.
 *
 * Only row-vector-over-matrix broadcasting exists (sub_row / mul_row /
 * add_row). Every other shape mismatch throws ShapeError.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clnr/errors.hpp"
#include "clnr/tensor.hpp"

namespace clnr::ad {

using NodeId = std::int64_t;

enum class OpTag {
  kLeaf,
  kMatMul,
  kTranspose,
  kSpMM,
  kRelu,
  kElu,
  kPRelu,
  kColMean,
  kColVar,
  kSubRow,
  kMulRow,
  kAddRow,
  kRsqrtEps,
  kNormalizeRows,
  kGatherRows,
  kAdd,
  kSub,
  kScale,
  kAffineIdentity,
  kMulScalar,
  kPowScalar,
  kSum,
  kSumSquares,
  kFrobeniusNorm,
  kNtXent,
  kSoftmaxCrossEntropy,
};

enum class Activation { kRelu, kElu, kPRelu };

template <class T>
class Tape;

/// Handle to one node on a tape. Cheap to copy; only valid while its tape is.
template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  NodeId id = -1;

  const Tensor<T>& value() const { return tape->value(id); }
  std::int64_t rows() const { return value().rows(); }
  std::int64_t cols() const { return value().cols(); }
};

/// Gradient slots indexed by node id. An empty slot means exactly zero.
template <class T>
class GradStore {
 public:
  explicit GradStore(std::size_t n) : slots_(n) {}

  bool has(NodeId id) const { return slots_[id].size() != 0; }
  const Tensor<T>& raw(NodeId id) const { return slots_[id]; }

  template <class Expr>
  void accumulate(NodeId id, const Expr& g) {
    if (slots_[id].size() == 0)
      slots_[id] = g;
    else
      slots_[id] += g;
  }

  Tensor<T>& slot(NodeId id) { return slots_[id]; }

 private:
  std::vector<Tensor<T>> slots_;
};

/// Result of backward(): gradient of the loss with respect to every node.
template <class T>
class Gradients {
 public:
  Gradients(const Tape<T>* tape, GradStore<T> store) : tape_(tape), store_(std::move(store)) {}

  /// Gradient wrt a node; an all-zero tensor of the node's shape if the node
  /// does not reach the loss.
  Tensor<T> of(NodeId id) const {
    if (store_.has(id)) return store_.raw(id);
    const auto& v = tape_->value(id);
    return Tensor<T>::Zero(v.rows(), v.cols());
  }
  Tensor<T> of(const Var<T>& v) const { return of(v.id); }
  bool reached(NodeId id) const { return store_.has(id); }

 private:
  const Tape<T>* tape_;
  GradStore<T> store_;
};

template <class T>
class Tape {
 public:
  using Backward = std::function<void(const Tape&, GradStore<T>&, NodeId out)>;

  struct Record {
    OpTag tag;
    std::vector<NodeId> inputs;
    NodeId output;
    Backward backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that never receives a gradient slot of interest (data, masks).
  Var<T> constant(Tensor<T> value) { return push_leaf(std::move(value), false); }

  /// A leaf whose gradient the caller wants.
  Var<T> parameter(Tensor<T> value) { return push_leaf(std::move(value), true); }

  const Tensor<T>& value(NodeId id) const { return values_[id]; }
  bool requires_grad(NodeId id) const { return requires_grad_[id]; }
  std::size_t size() const { return values_.size(); }
  const std::vector<Record>& records() const { return records_; }

  /// Appends an op result. The record is kept only if some input needs a
  /// gradient, so constant subgraphs cost nothing on the way back.
  Var<T> push(OpTag tag, std::vector<NodeId> inputs, Tensor<T> value, Backward backward) {
    if (!value.allFinite())
      throw NumericError("non-finite value produced by op " + std::to_string(static_cast<int>(tag)));
    bool rg = false;
    for (NodeId in : inputs) rg = rg || requires_grad_[in];
    const NodeId out = static_cast<NodeId>(values_.size());
    values_.push_back(std::move(value));
    requires_grad_.push_back(rg);
    if (rg) records_.push_back(Record{tag, std::move(inputs), out, std::move(backward)});
    return Var<T>{this, out};
  }

  Gradients<T> backward(const Var<T>& loss) const {
    const auto& lv = value(loss.id);
    if (lv.rows() != 1 || lv.cols() != 1)
      throw ContractError("backward: loss must be 1x1, got " + shape_of(lv));
    GradStore<T> grads(values_.size());
    grads.accumulate(loss.id, Tensor<T>::Ones(1, 1));
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
      if (!grads.has(it->output)) continue;
      it->backward(*this, grads, it->output);
    }
    return Gradients<T>(this, std::move(grads));
  }

 private:
  Var<T> push_leaf(Tensor<T> value, bool rg) {
    if (!value.allFinite()) throw NumericError("non-finite leaf value");
    values_.push_back(std::move(value));
    requires_grad_.push_back(rg);
    return Var<T>{this, static_cast<NodeId>(values_.size() - 1)};
  }

  std::vector<Tensor<T>> values_;
  std::vector<bool> requires_grad_;
  std::vector<Record> records_;
};

namespace detail {

template <class T>
void require_same_tape(const Var<T>& a, const Var<T>& b) {
  if (a.tape != b.tape) throw ContractError("operands live on different tapes");
}

template <class T>
void require_scalar(const Var<T>& s, const char* op) {
  if (s.rows() != 1 || s.cols() != 1)
    throw ShapeError(std::string(op) + ": expected 1x1 operand, got " + shape_of(s.value()));
}

template <class T>
void require_row_vector(const Var<T>& x, const Var<T>& r, const char* op) {
  if (r.rows() != 1 || r.cols() != x.cols())
    throw ShapeError(std::string(op) + ": row operand " + shape_of(r.value()) +
                     " does not broadcast over " + shape_of(x.value()));
}

template <class T, class Expr>
void accumulate_if(const Tape<T>& tape, GradStore<T>& g, NodeId id, const Expr& v) {
  if (tape.requires_grad(id)) g.accumulate(id, v);
}

}  // namespace detail


// ---------------------------------------------------------------------------
// Linear algebra

/// c = a b. Backward: da = dc b^T, db = a^T dc.
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  detail::require_same_tape(a, b);
  if (a.cols() != b.rows())
    throw ShapeError("matmul: " + shape_of(a.value()) + " times " + shape_of(b.value()));
  Tensor<T> c = a.value() * b.value();
  const NodeId ai = a.id, bi = b.id;
  return a.tape->push(OpTag::kMatMul, {ai, bi}, std::move(c),
                      [ai, bi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& dc = g.raw(out);
                        if (t.requires_grad(ai)) g.accumulate(ai, dc * t.value(bi).transpose());
                        if (t.requires_grad(bi)) g.accumulate(bi, t.value(ai).transpose() * dc);
                      });
}

template <class T>
Var<T> transpose(const Var<T>& a) {
  Tensor<T> c = a.value().transpose();
  const NodeId ai = a.id;
  return a.tape->push(OpTag::kTranspose, {ai}, std::move(c),
                      [ai](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        detail::accumulate_if(t, g, ai, g.raw(out).transpose());
                      });
}

/// y = adj x with adj a constant. The adjacency must outlive the tape.
template <class T>
Var<T> spmm(const SparseMatrix<T>& adj, const Var<T>& x) {
  if (adj.cols != x.rows())
    throw ShapeError("spmm: " + std::to_string(adj.rows) + "x" + std::to_string(adj.cols) +
                     " times " + shape_of(x.value()));
  Tensor<T> y = sparse_dense_product(adj, x.value());
  const NodeId xi = x.id;
  const SparseMatrix<T>* a = &adj;
  return x.tape->push(OpTag::kSpMM, {xi}, std::move(y),
                      [xi, a](const Tape<T>&, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& dy = g.raw(out);
                        Tensor<T> dx = Tensor<T>::Zero(a->cols, dy.cols());
                        // dx = adj^T dy, scattered row by row.
                        for (std::int64_t r = 0; r < a->rows; ++r)
                          for (std::int64_t k = a->offsets[r]; k < a->offsets[r + 1]; ++k)
                            dx.row(a->indices[k]).noalias() += a->values[k] * dy.row(r);
                        g.accumulate(xi, dx);
                      });
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities

/// relu / elu (alpha = 1) / prelu. prelu needs a 1x1 slope node.
/// relu'(0) is taken as 0.
template <class T>
Var<T> activation(Activation kind, const Var<T>& x, const Var<T>* slope = nullptr) {
  const NodeId xi = x.id;
  const Tensor<T>& xv = x.value();
  switch (kind) {
    case Activation::kRelu: {
      Tensor<T> y = xv.cwiseMax(T(0));
      return x.tape->push(OpTag::kRelu, {xi}, std::move(y),
                          [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                            const auto& in = t.value(xi);
                            g.accumulate(xi, (in.array() > T(0)).select(g.raw(out), T(0)));
                          });
    }
    case Activation::kElu: {
      Tensor<T> y = (xv.array() > T(0)).select(xv, xv.array().exp() - T(1));
      return x.tape->push(OpTag::kElu, {xi}, std::move(y),
                          [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                            const auto& in = t.value(xi);
                            const Tensor<T>& dy = g.raw(out);
                            g.accumulate(xi, (in.array() > T(0))
                                                 .select(dy, dy.array() * in.array().exp())
                                                 .matrix());
                          });
    }
    case Activation::kPRelu: {
      if (slope == nullptr) throw ContractError("prelu requires a slope parameter");
      detail::require_same_tape(x, *slope);
      detail::require_scalar(*slope, "prelu");
      const NodeId si = slope->id;
      const T a = slope->value()(0, 0);
      Tensor<T> y = (xv.array() > T(0)).select(xv, a * xv);
      return x.tape->push(
          OpTag::kPRelu, {xi, si}, std::move(y),
          [xi, si](const Tape<T>& t, GradStore<T>& g, NodeId out) {
            const auto& in = t.value(xi);
            const Tensor<T>& dy = g.raw(out);
            const T a = t.value(si)(0, 0);
            if (t.requires_grad(xi))
              g.accumulate(xi, (in.array() > T(0)).select(dy, a * dy).matrix());
            if (t.requires_grad(si)) {
              const T ds = (in.array() > T(0)).select(Tensor<T>::Zero(in.rows(), in.cols()),
                                                      in.cwiseProduct(dy)).sum();
              g.accumulate(si, scalar_tensor(ds));
            }
          });
    }
  }
  throw ContractError("unknown activation");
}

// ---------------------------------------------------------------------------
// Column statistics and row-vector broadcasting

/// Column means (1 x cols). Needs at least two rows.
template <class T>
Var<T> column_mean(const Var<T>& x) {
  if (x.rows() < 2) throw DegenerateInputError("column statistics need at least 2 rows");
  Tensor<T> m = x.value().colwise().mean();
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kColMean, {xi}, std::move(m),
                      [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const auto n = t.value(xi).rows();
                        g.accumulate(xi, (g.raw(out) / T(n)).replicate(n, 1));
                      });
}

/// Population column variances (divide by n).
template <class T>
Var<T> column_var(const Var<T>& x) {
  if (x.rows() < 2) throw DegenerateInputError("column statistics need at least 2 rows");
  const Tensor<T>& xv = x.value();
  const auto n = xv.rows();
  Tensor<T> mean = xv.colwise().mean();
  Tensor<T> v = (xv.rowwise() - mean.row(0)).array().square().colwise().sum() / T(n);
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kColVar, {xi}, std::move(v),
                      [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& in = t.value(xi);
                        const auto rows = in.rows();
                        Tensor<T> centered = in.rowwise() - in.colwise().mean();
                        // The mean's own dependence on x cancels: sum of deviations is 0.
                        Tensor<T> scale = g.raw(out) * (T(2) / T(rows));
                        g.accumulate(xi, (centered.array().rowwise() * scale.row(0).array()).matrix());
                      });
}

/// (means, population variances) of each column.
template <class T>
std::pair<Var<T>, Var<T>> column_moments(const Var<T>& x) {
  return {column_mean(x), column_var(x)};
}

/// y = x - 1 r^T
template <class T>
Var<T> sub_row(const Var<T>& x, const Var<T>& r) {
  detail::require_same_tape(x, r);
  detail::require_row_vector(x, r, "sub_row");
  Tensor<T> y = x.value().rowwise() - r.value().row(0);
  const NodeId xi = x.id, ri = r.id;
  return x.tape->push(OpTag::kSubRow, {xi, ri}, std::move(y),
                      [xi, ri](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& dy = g.raw(out);
                        detail::accumulate_if(t, g, xi, dy);
                        if (t.requires_grad(ri)) g.accumulate(ri, -dy.colwise().sum());
                      });
}

/// y = x + 1 r^T
template <class T>
Var<T> add_row(const Var<T>& x, const Var<T>& r) {
  detail::require_same_tape(x, r);
  detail::require_row_vector(x, r, "add_row");
  Tensor<T> y = x.value().rowwise() + r.value().row(0);
  const NodeId xi = x.id, ri = r.id;
  return x.tape->push(OpTag::kAddRow, {xi, ri}, std::move(y),
                      [xi, ri](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& dy = g.raw(out);
                        detail::accumulate_if(t, g, xi, dy);
                        if (t.requires_grad(ri)) g.accumulate(ri, dy.colwise().sum());
                      });
}

/// y_ij = x_ij r_j
template <class T>
Var<T> mul_row(const Var<T>& x, const Var<T>& r) {
  detail::require_same_tape(x, r);
  detail::require_row_vector(x, r, "mul_row");
  Tensor<T> y = (x.value().array().rowwise() * r.value().row(0).array()).matrix();
  const NodeId xi = x.id, ri = r.id;
  return x.tape->push(
      OpTag::kMulRow, {xi, ri}, std::move(y),
      [xi, ri](const Tape<T>& t, GradStore<T>& g, NodeId out) {
        const Tensor<T>& dy = g.raw(out);
        if (t.requires_grad(xi))
          g.accumulate(xi, (dy.array().rowwise() * t.value(ri).row(0).array()).matrix());
        if (t.requires_grad(ri))
          g.accumulate(ri, dy.cwiseProduct(t.value(xi)).colwise().sum());
      });
}

/// Elementwise (v + eps)^(-1/2).
template <class T>
Var<T> rsqrt_eps(const Var<T>& v, T eps) {
  if ((v.value().array() + eps <= T(0)).any())
    throw NumericError("rsqrt_eps: non-positive argument");
  Tensor<T> y = (v.value().array() + eps).rsqrt().matrix();
  const NodeId vi = v.id;
  return v.tape->push(OpTag::kRsqrtEps, {vi}, std::move(y),
                      [vi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        // d/dv (v+eps)^(-1/2) = -1/2 y^3
                        const auto& y = t.value(out).array();
                        g.accumulate(vi, (g.raw(out).array() * T(-0.5) * y.cube()).matrix());
                      });
}

// ---------------------------------------------------------------------------
// Row operations

/// Each row divided by max(||row||, eps).
template <class T>
Var<T> normalize_rows(const Var<T>& x, T eps) {
  const Tensor<T>& xv = x.value();
  Eigen::Matrix<T, Eigen::Dynamic, 1> norms = xv.rowwise().norm();
  Tensor<T> y(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) y.row(i) = xv.row(i) / std::max(norms(i), eps);
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kNormalizeRows, {xi}, std::move(y),
                      [xi, eps](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& in = t.value(xi);
                        const Tensor<T>& y = t.value(out);
                        const Tensor<T>& dy = g.raw(out);
                        Tensor<T> dx(in.rows(), in.cols());
                        for (Eigen::Index i = 0; i < in.rows(); ++i) {
                          const T n = in.row(i).norm();
                          if (n > eps)
                            dx.row(i) = (dy.row(i) - y.row(i) * y.row(i).dot(dy.row(i))) / n;
                          else
                            dx.row(i) = dy.row(i) / eps;
                        }
                        g.accumulate(xi, dx);
                      });
}

/// Rows of x selected by idx, in order.
template <class T>
Var<T> gather_rows(const Var<T>& x, std::span<const std::int64_t> idx) {
  const Tensor<T>& xv = x.value();
  Tensor<T> y(static_cast<Eigen::Index>(idx.size()), xv.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= xv.rows())
      throw ShapeError("gather_rows: index " + std::to_string(idx[k]) + " out of range");
    y.row(static_cast<Eigen::Index>(k)) = xv.row(idx[k]);
  }
  const NodeId xi = x.id;
  std::vector<std::int64_t> rows(idx.begin(), idx.end());
  return x.tape->push(OpTag::kGatherRows, {xi}, std::move(y),
                      [xi, rows = std::move(rows)](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& dy = g.raw(out);
                        const auto& in = t.value(xi);
                        Tensor<T> dx = Tensor<T>::Zero(in.rows(), in.cols());
                        for (std::size_t k = 0; k < rows.size(); ++k)
                          dx.row(rows[k]) += dy.row(static_cast<Eigen::Index>(k));
                        g.accumulate(xi, dx);
                      });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("add: " + shape_of(a.value()) + " vs " + shape_of(b.value()));
  Tensor<T> c = a.value() + b.value();
  const NodeId ai = a.id, bi = b.id;
  return a.tape->push(OpTag::kAdd, {ai, bi}, std::move(c),
                      [ai, bi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        detail::accumulate_if(t, g, ai, g.raw(out));
                        detail::accumulate_if(t, g, bi, g.raw(out));
                      });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("sub: " + shape_of(a.value()) + " vs " + shape_of(b.value()));
  Tensor<T> c = a.value() - b.value();
  const NodeId ai = a.id, bi = b.id;
  return a.tape->push(OpTag::kSub, {ai, bi}, std::move(c),
                      [ai, bi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        detail::accumulate_if(t, g, ai, g.raw(out));
                        if (t.requires_grad(bi)) g.accumulate(bi, -g.raw(out));
                      });
}

/// c * x for a constant c.
template <class T>
Var<T> scale(const Var<T>& x, T c) {
  Tensor<T> y = c * x.value();
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kScale, {xi}, std::move(y),
                      [xi, c](const Tape<T>&, GradStore<T>& g, NodeId out) {
                        g.accumulate(xi, c * g.raw(out));
                      });
}

/// a * x + b * I for square x and constants a, b.
template <class T>
Var<T> affine_identity(const Var<T>& x, T a, T b) {
  if (x.rows() != x.cols()) throw ShapeError("affine_identity: non-square " + shape_of(x.value()));
  Tensor<T> y = a * x.value();
  y.diagonal().array() += b;
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kAffineIdentity, {xi}, std::move(y),
                      [xi, a](const Tape<T>&, GradStore<T>& g, NodeId out) {
                        g.accumulate(xi, a * g.raw(out));
                      });
}

/// s * x for a 1x1 node s.
template <class T>
Var<T> mul_scalar(const Var<T>& x, const Var<T>& s) {
  detail::require_same_tape(x, s);
  detail::require_scalar(s, "mul_scalar");
  Tensor<T> y = s.value()(0, 0) * x.value();
  const NodeId xi = x.id, si = s.id;
  return x.tape->push(OpTag::kMulScalar, {xi, si}, std::move(y),
                      [xi, si](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const Tensor<T>& dy = g.raw(out);
                        if (t.requires_grad(xi)) g.accumulate(xi, t.value(si)(0, 0) * dy);
                        if (t.requires_grad(si))
                          g.accumulate(si, scalar_tensor(dy.cwiseProduct(t.value(xi)).sum()));
                      });
}

/// s^p for a positive 1x1 node s.
template <class T>
Var<T> pow_scalar(const Var<T>& s, T p) {
  detail::require_scalar(s, "pow_scalar");
  const T sv = s.value()(0, 0);
  if (!(sv > T(0))) throw NumericError("pow_scalar: base must be positive");
  const NodeId si = s.id;
  return s.tape->push(OpTag::kPowScalar, {si}, scalar_tensor<T>(std::pow(sv, p)),
                      [si, p](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const T base = t.value(si)(0, 0);
                        g.accumulate(si, scalar_tensor<T>(g.raw(out)(0, 0) * p *
                                                          std::pow(base, p - T(1))));
                      });
}

// ---------------------------------------------------------------------------
// Reductions

template <class T>
Var<T> sum(const Var<T>& x) {
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kSum, {xi}, scalar_tensor<T>(x.value().sum()),
                      [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const auto& in = t.value(xi);
                        g.accumulate(xi, Tensor<T>::Constant(in.rows(), in.cols(), g.raw(out)(0, 0)));
                      });
}

template <class T>
Var<T> sum_squares(const Var<T>& x) {
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kSumSquares, {xi}, scalar_tensor<T>(x.value().squaredNorm()),
                      [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        g.accumulate(xi, (T(2) * g.raw(out)(0, 0)) * t.value(xi));
                      });
}

template <class T>
Var<T> frobenius_norm(const Var<T>& x) {
  const T n = x.value().norm();
  if (!(n > T(0))) throw NumericError("frobenius_norm: zero matrix has no gradient");
  const NodeId xi = x.id;
  return x.tape->push(OpTag::kFrobeniusNorm, {xi}, scalar_tensor<T>(n),
                      [xi](const Tape<T>& t, GradStore<T>& g, NodeId out) {
                        const T nv = t.value(out)(0, 0);
                        g.accumulate(xi, (g.raw(out)(0, 0) / nv) * t.value(xi));
                      });
}

// ---------------------------------------------------------------------------
// Losses

namespace detail {

// Log of sum_k exp(x_k) over the entries where keep(k) holds.
template <class T, class Row, class Keep>
T masked_logsumexp(const Row& x, Keep keep) {
  T mx = -std::numeric_limits<T>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (keep(k)) mx = std::max(mx, x(k));
  if (mx == -std::numeric_limits<T>::infinity()) return mx;
  T acc = T(0);
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (keep(k)) acc += std::exp(x(k) - mx);
  return mx + std::log(acc);
}

template <class T>
T log_add_exp(T a, T b) {
  constexpr T kNegInf = -std::numeric_limits<T>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const T mx = std::max(a, b);
  return mx + std::log(std::exp(a - mx) + std::exp(b - mx));
}

}  // namespace detail

/// Symmetrized NT-Xent over rows that are already unit-norm.
///
/// For row i and direction (u -> v) the candidate set is the positive
/// s(u_i, v_i), every inter-view s(u_i, v_k) with k != i and every
/// intra-view s(u_i, u_k) with k != i, each divided by tau. The result is
///   -(1 / 2m) sum_i [l(u_i, v_i) + l(v_i, u_i)],
/// i.e. the negated objective, ready to minimize.
template <class T>
Var<T> nt_xent_unit(const Var<T>& u, const Var<T>& v, T tau) {
  detail::require_same_tape(u, v);
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw ShapeError("nt_xent: " + shape_of(u.value()) + " vs " + shape_of(v.value()));
  if (!(tau > T(0))) throw ContractError("nt_xent: tau must be positive");
  const Eigen::Index m = u.rows();
  const Tensor<T>& U = u.value();
  const Tensor<T>& V = v.value();
  const Tensor<T> suv = (U * V.transpose()) / tau;
  const Tensor<T> suu = (U * U.transpose()) / tau;
  const Tensor<T> svv = (V * V.transpose()) / tau;

  // Probability weights over the candidate set of every (row, direction),
  // kept for the backward pass. p_inter1(i, k): weight of s(u_i, v_k) in
  // direction u -> v; p_inter2(i, k): weight of s(v_i, u_k) in v -> u.
  Tensor<T> p_inter1(m, m), p_intra1(m, m), p_inter2(m, m), p_intra2(m, m);
  T total = T(0);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto not_i = [i](Eigen::Index k) { return k != i; };
    auto all = [](Eigen::Index) { return true; };
    const auto r1 = suv.row(i);
    const auto r2 = suv.col(i).transpose();  // s(v_i, u_k)
    const T lse1 = detail::log_add_exp(detail::masked_logsumexp<T>(r1, all),
                                       detail::masked_logsumexp<T>(suu.row(i), not_i));
    const T lse2 = detail::log_add_exp(detail::masked_logsumexp<T>(r2, all),
                                       detail::masked_logsumexp<T>(svv.row(i), not_i));
    total += (suv(i, i) - lse1) + (suv(i, i) - lse2);
    for (Eigen::Index k = 0; k < m; ++k) {
      p_inter1(i, k) = std::exp(r1(k) - lse1);
      p_inter2(i, k) = std::exp(r2(k) - lse2);
      p_intra1(i, k) = k == i ? T(0) : std::exp(suu(i, k) - lse1);
      p_intra2(i, k) = k == i ? T(0) : std::exp(svv(i, k) - lse2);
    }
  }
  const T loss = -total / (T(2) * T(m));
  const NodeId ui = u.id, vi = v.id;
  return u.tape->push(
      OpTag::kNtXent, {ui, vi}, scalar_tensor(loss),
      [ui, vi, tau, p_inter1 = std::move(p_inter1), p_intra1 = std::move(p_intra1),
       p_inter2 = std::move(p_inter2),
       p_intra2 = std::move(p_intra2)](const Tape<T>& t, GradStore<T>& g, NodeId out) {
        const Tensor<T>& U = t.value(ui);
        const Tensor<T>& V = t.value(vi);
        const Eigen::Index m = U.rows();
        const T c = g.raw(out)(0, 0) / (T(2) * T(m));
        const Tensor<T> eye = Tensor<T>::Identity(m, m);
        // Gradients wrt the similarity matrices S_uv, S_uu, S_vv (before /tau).
        const Tensor<T> g_uv = c * ((p_inter1 - eye) + (p_inter2 - eye).transpose());
        const Tensor<T> g_uu = c * p_intra1;
        const Tensor<T> g_vv = c * p_intra2;
        if (t.requires_grad(ui))
          g.accumulate(ui, (g_uv * V + (g_uu + g_uu.transpose()) * U) / tau);
        if (t.requires_grad(vi))
          g.accumulate(vi, (g_uv.transpose() * U + (g_vv + g_vv.transpose()) * V) / tau);
      });
}

/// Mean softmax cross-entropy of logits (n x K) against integer labels.
template <class T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const std::int64_t> labels) {
  const Tensor<T>& z = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != z.rows())
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     shape_of(z));
  if (z.rows() == 0) throw DegenerateInputError("softmax_cross_entropy: empty batch");
  Tensor<T> prob(z.rows(), z.cols());
  T total = T(0);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const std::int64_t y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= z.cols()) throw ShapeError("softmax_cross_entropy: label out of range");
    const T mx = z.row(i).maxCoeff();
    const T lse = mx + std::log((z.row(i).array() - mx).exp().sum());
    prob.row(i) = (z.row(i).array() - lse).exp().matrix();
    total += lse - z(i, y);
  }
  const NodeId li = logits.id;
  std::vector<std::int64_t> ys(labels.begin(), labels.end());
  return logits.tape->push(
      OpTag::kSoftmaxCrossEntropy, {li}, scalar_tensor<T>(total / T(z.rows())),
      [li, prob = std::move(prob), ys = std::move(ys)](const Tape<T>&, GradStore<T>& g,
                                                        NodeId out) {
        Tensor<T> d = prob;
        for (std::size_t i = 0; i < ys.size(); ++i) d(static_cast<Eigen::Index>(i), ys[i]) -= T(1);
        g.accumulate(li, (g.raw(out)(0, 0) / T(ys.size())) * d);
      });
}

// ---------------------------------------------------------------------------
// Finite-difference checking

/// Builds a scalar loss from the given point on a fresh tape.
template <class T>
using LossBuilder = std::function<Var<T>(Tape<T>&, const Var<T>& point)>;

/// Worst relative error between the reverse-mode gradient and central
/// differences (f(x+h) - f(x-h)) / 2h over every coordinate of `point`.
/// Denominator: max(|analytic|, |numeric|, 1e-8).
template <class T>
T grad_check(const LossBuilder<T>& f, const Tensor<T>& point, T h = T(1e-5)) {
  if (!(h > T(0))) throw ContractError("grad_check: step must be positive");
  Tensor<T> analytic;
  {
    Tape<T> tape;
    Var<T> x = tape.parameter(point);
    Var<T> loss = f(tape, x);
    if (!loss.value().allFinite()) throw NumericError("grad_check: non-finite loss");
    analytic = tape.backward(loss).of(x);
  }
  auto eval = [&f](const Tensor<T>& p) {
    Tape<T> tape;
    Var<T> x = tape.parameter(p);
    const T v = f(tape, x).value()(0, 0);
    if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
    return v;
  };
  T worst = T(0);
  Tensor<T> probe = point;
  for (Eigen::Index i = 0; i < point.rows(); ++i) {
    for (Eigen::Index j = 0; j < point.cols(); ++j) {
      const T orig = probe(i, j);
      probe(i, j) = orig + h;
      const T fp = eval(probe);
      probe(i, j) = orig - h;
      const T fm = eval(probe);
      probe(i, j) = orig;
      const T numeric = (fp - fm) / (T(2) * h);
      const T a = analytic(i, j);
      const T denom = std::max({std::abs(a), std::abs(numeric), T(1e-8)});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace clnr::ad
