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
 * @file eval.hpp
 * @brief Frozen-embedding evaluation: linear probe, alignment / uniformity on
 * the hypersphere, and label-based clustering scores.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "clnr/augment.hpp"
#include "clnr/autodiff.hpp"
#include "clnr/errors.hpp"
#include "clnr/graph.hpp"
#include "clnr/model.hpp"
#include "clnr/objective.hpp"
#include "clnr/rng.hpp"
#include "clnr/tensor.hpp"

namespace clnr {

using Embedding = Tensor<double>;

// ---------------------------------------------------------------------------
// Linear probe

struct ProbeConfig {
  double lr = 5e-3;
  double weight_decay = 1e-4;
  int epochs = 1000;
  /// Stop after this many epochs without a new best validation accuracy.
  int patience = 100;

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("probe learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("probe weight decay must be nonnegative");
    if (epochs < 1) throw ConfigError("probe epochs must be positive");
    if (patience < 1) throw ConfigError("probe patience must be positive");
  }
};

struct ProbeResult {
  double test_accuracy = 0.0;
  double val_accuracy = 0.0;
  int best_epoch = 0;
  /// (F + 1) x K: feature weights, then the bias row.
  Tensor<double> weights;
};

namespace detail {

inline Tensor<double> take_rows(const Tensor<double>& x, const std::vector<std::int64_t>& idx) {
  Tensor<double> out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(idx[k]);
  return out;
}

inline std::vector<std::int64_t> take(const std::vector<std::int64_t>& v,
                                      const std::vector<std::int64_t>& idx) {
  std::vector<std::int64_t> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

struct Score {
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
};

inline Score score(const Tensor<double>& x, const std::vector<std::int64_t>& y, const Tensor<double>& w,
                   const Tensor<double>& b) {
  if (y.empty()) return {};
  const Tensor<double> logits = (x * w).rowwise() + b.row(0);
  std::int64_t hit = 0;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    const double mx = logits.row(i).maxCoeff(&arg);
    const auto yi = y[static_cast<std::size_t>(i)];
    hit += arg == yi;
    loss += mx + std::log((logits.row(i).array() - mx).exp().sum()) - logits(i, yi);
  }
  const auto n = static_cast<double>(y.size());
  return {static_cast<double>(hit) / n, loss / n};
}

inline double accuracy(const Tensor<double>& x, const std::vector<std::int64_t>& y, const Tensor<double>& w,
                       const Tensor<double>& b) {
  return score(x, y, w, b).accuracy;
}

}  // namespace detail

/// Multinomial logistic regression on frozen embeddings, full-batch Adam on
/// the train split, early-stopped on validation accuracy (validation loss
/// breaks ties). Reports test accuracy at the best validation epoch.
inline ProbeResult linear_probe(const Embedding& e, const std::vector<std::int64_t>& labels,
                                const Splits& splits, const ProbeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (e.cols() == 0 || e.rows() == 0) throw DegenerateInputError("linear_probe: empty embeddings");
  if (!e.allFinite()) throw NumericError("linear_probe: non-finite embeddings");
  if (static_cast<Eigen::Index>(labels.size()) != e.rows())
    throw ShapeError("linear_probe: label count does not match embedding rows");
  if (splits.train.empty()) throw DegenerateInputError("linear_probe: empty train split");
  for (const auto* part : {&splits.train, &splits.val, &splits.test})
    for (auto i : *part)
      if (i < 0 || i >= e.rows()) throw ShapeError("linear_probe: split index out of range");
  const std::int64_t n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  const auto y_train = detail::take(labels, splits.train);
  if (std::all_of(y_train.begin(), y_train.end(), [&](auto y) { return y == y_train.front(); }))
    throw DegenerateInputError("linear_probe: train split holds a single class");

  const Tensor<double> x_train = detail::take_rows(e, splits.train);
  const Tensor<double> x_val = detail::take_rows(e, splits.val);
  const Tensor<double> x_test = detail::take_rows(e, splits.test);
  const auto y_val = detail::take(labels, splits.val);
  const auto y_test = detail::take(labels, splits.test);

  Engine eng = make_engine(derive_seed(seed, "probe-init"));
  Tensor<double> w = glorot_uniform<double>(e.cols(), n_classes, eng);
  Tensor<double> b = Tensor<double>::Zero(1, n_classes);
  AdamState<double> adam;

  ProbeResult best;
  best.val_accuracy = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    ad::Tape<double> tape;
    auto wv = tape.parameter(w);
    auto bv = tape.parameter(b);
    auto logits = ad::add_row(ad::matmul(tape.constant(x_train), wv), bv);
    auto loss = ad::softmax_cross_entropy(logits, y_train);
    const auto grads = tape.backward(loss);
    std::vector<Tensor<double>*> targets{&w, &b};
    std::vector<Tensor<double>> gvals{grads.of(wv), grads.of(bv)};
    adam_step<double>(adam, targets, gvals, cfg.lr, cfg.weight_decay);

    const detail::Score val = splits.val.empty() ? detail::score(x_train, y_train, w, b)
                                                 : detail::score(x_val, y_val, w, b);
    // Validation loss breaks accuracy ties, so a plateau in accuracy does
    // not end training while the fit is still improving.
    if (val.accuracy > best.val_accuracy || (val.accuracy == best.val_accuracy && val.loss < best_loss)) {
      best.val_accuracy = val.accuracy;
      best_loss = val.loss;
      best.test_accuracy = detail::accuracy(x_test, y_test, w, b);
      best.best_epoch = epoch;
      best.weights.resize(w.rows() + 1, w.cols());
      best.weights.topRows(w.rows()) = w;
      best.weights.bottomRows(1) = b;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Alignment and uniformity

/// Mean over matched rows of ||u_i - v_i||^alpha.
inline double alignment(const Embedding& u, const Embedding& v, double alpha = 2.0) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw ShapeError("alignment: " + shape_of(u) + " vs " + shape_of(v));
  if (u.rows() == 0) throw DegenerateInputError("alignment: no rows");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double d2 = (u.row(i) - v.row(i)).squaredNorm();
    acc += alpha == 2.0 ? d2 : std::pow(std::sqrt(d2), alpha);
  }
  return acc / static_cast<double>(u.rows());
}

/// log of the mean Gaussian potential exp(-t ||x_i - x_j||^2) over ordered
/// pairs i != j, via log-sum-exp over Gram-matrix distances.
inline double uniformity(const Embedding& e, double t = 2.0) {
  const Eigen::Index n = e.rows();
  if (n < 2) throw DegenerateInputError("uniformity: needs at least 2 rows");
  const Eigen::VectorXd sq = e.rowwise().squaredNorm();
  constexpr Eigen::Index kBlock = 512;
  // Two passes over row blocks: the max exponent, then the shifted sum.
  auto for_each_exponent = [&](auto&& fn) {
    for (Eigen::Index r0 = 0; r0 < n; r0 += kBlock) {
      const Eigen::Index rb = std::min(kBlock, n - r0);
      const Eigen::MatrixXd gram = e.middleRows(r0, rb) * e.transpose();
      for (Eigen::Index i = 0; i < rb; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
          if (r0 + i == j) continue;
          const double d2 = std::max(0.0, sq(r0 + i) + sq(j) - 2.0 * gram(i, j));
          fn(-t * d2);
        }
    }
  };
  double mx = -std::numeric_limits<double>::infinity();
  for_each_exponent([&](double a) { mx = std::max(mx, a); });
  double acc = 0.0;
  for_each_exponent([&](double a) { acc += std::exp(a - mx); });
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  return mx + std::log(acc) - std::log(pairs);
}

// ---------------------------------------------------------------------------
// Clustering scores (ground-truth labels as clusters)

namespace detail {

/// Labels remapped to 0..K-1 over the classes actually present.
struct Clusters {
  std::vector<std::int64_t> id;
  std::vector<std::int64_t> size;
};

inline Clusters compact_labels(const Embedding& e, const std::vector<std::int64_t>& labels,
                               const char* who) {
  if (static_cast<Eigen::Index>(labels.size()) != e.rows())
    throw ShapeError(std::string(who) + ": label count does not match embedding rows");
  std::vector<std::int64_t> remap;
  Clusters c;
  c.id.reserve(labels.size());
  for (auto y : labels) {
    if (y < 0) throw ShapeError(std::string(who) + ": negative label");
    if (static_cast<std::size_t>(y) >= remap.size()) remap.resize(static_cast<std::size_t>(y) + 1, -1);
    if (remap[static_cast<std::size_t>(y)] < 0) {
      remap[static_cast<std::size_t>(y)] = static_cast<std::int64_t>(c.size.size());
      c.size.push_back(0);
    }
    const auto k = remap[static_cast<std::size_t>(y)];
    c.id.push_back(k);
    ++c.size[static_cast<std::size_t>(k)];
  }
  if (c.size.size() < 2)
    throw DegenerateInputError(std::string(who) + ": needs at least 2 classes present");
  return c;
}

inline Eigen::MatrixXd centroids(const Embedding& e, const Clusters& c) {
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.size.size()), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i) mu.row(c.id[i]) += e.row(i);
  for (Eigen::Index k = 0; k < mu.rows(); ++k) mu.row(k) /= static_cast<double>(c.size[k]);
  return mu;
}

}  // namespace detail

/// Mean silhouette (Y_i - X_i) / max(X_i, Y_i), Euclidean. Singleton-cluster
/// nodes and X_i = Y_i = 0 contribute 0.
inline double silhouette(const Embedding& e, const std::vector<std::int64_t>& labels) {
  const auto c = detail::compact_labels(e, labels, "silhouette");
  const Eigen::Index n = e.rows();
  const auto k = static_cast<Eigen::Index>(c.size.size());
  Eigen::MatrixXd dist_sum = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (e.row(i) - e.row(j)).norm();
      dist_sum(i, c.id[j]) += d;
      dist_sum(j, c.id[i]) += d;
    }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto own = c.id[i];
    if (c.size[own] < 2) continue;
    const double x = dist_sum(i, own) / static_cast<double>(c.size[own] - 1);
    double y = std::numeric_limits<double>::infinity();
    for (Eigen::Index q = 0; q < k; ++q)
      if (q != own) y = std::min(y, dist_sum(i, q) / static_cast<double>(c.size[q]));
    const double denom = std::max(x, y);
    if (denom > 0.0) total += (y - x) / denom;
  }
  return total / static_cast<double>(n);
}

/// (1/K) sum_i max_{j != i} (S_i + S_j) / M_ij with S_i the mean distance to
/// centroid i and M_ij the centroid distance.
inline double davies_bouldin(const Embedding& e, const std::vector<std::int64_t>& labels) {
  const auto c = detail::compact_labels(e, labels, "davies_bouldin");
  const Eigen::MatrixXd mu = detail::centroids(e, c);
  const Eigen::Index k = mu.rows();
  Eigen::VectorXd scatter = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < e.rows(); ++i) scatter(c.id[i]) += (e.row(i) - mu.row(c.id[i])).norm();
  for (Eigen::Index q = 0; q < k; ++q) scatter(q) /= static_cast<double>(c.size[q]);
  double total = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    double worst = 0.0;
    for (Eigen::Index b = 0; b < k; ++b) {
      if (a == b) continue;
      const double m = (mu.row(a) - mu.row(b)).norm();
      if (m == 0.0) throw NumericError("davies_bouldin: coincident centroids give an infinite ratio");
      worst = std::max(worst, (scatter(a) + scatter(b)) / m);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

/// (tr B / tr W) (N - K) / (K - 1).
inline double calinski_harabasz(const Embedding& e, const std::vector<std::int64_t>& labels) {
  const auto c = detail::compact_labels(e, labels, "calinski_harabasz");
  const Eigen::Index n = e.rows();
  const auto k = static_cast<Eigen::Index>(c.size.size());
  if (n <= k) throw DegenerateInputError("calinski_harabasz: needs more points than classes");
  const Eigen::MatrixXd mu = detail::centroids(e, c);
  const Eigen::RowVectorXd overall = e.colwise().mean();
  double tr_b = 0.0, tr_w = 0.0;
  for (Eigen::Index q = 0; q < k; ++q)
    tr_b += static_cast<double>(c.size[q]) * (mu.row(q) - overall).squaredNorm();
  for (Eigen::Index i = 0; i < n; ++i) tr_w += (e.row(i) - mu.row(c.id[i])).squaredNorm();
  if (tr_w == 0.0) throw NumericError("calinski_harabasz: zero within-cluster dispersion");
  return tr_b / tr_w * static_cast<double>(n - k) / static_cast<double>(k - 1);
}

// ---------------------------------------------------------------------------
// Reports

struct MetricsReport {
  std::string dataset;
  std::string method;
  std::int64_t dim = 0;
  std::uint64_t seed = 0;
  std::optional<double> accuracy;
  std::optional<double> align;
  std::optional<double> unif;
  std::optional<double> sc;
  std::optional<double> db;
  std::optional<double> ch;
  double seconds = 0.0;
};

inline constexpr const char* kMetricsHeader = "dataset,method,dim,seed,accuracy,align,unif,sc,db,ch,seconds";

/// One CSV row (no trailing newline). Missing metrics are empty fields.
inline std::string to_csv_row(const MetricsReport& r) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  auto opt = [&out](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  out << r.dataset << ',' << r.method << ',' << r.dim << ',' << r.seed;
  opt(r.accuracy);
  opt(r.align);
  opt(r.unif);
  opt(r.sc);
  opt(r.db);
  opt(r.ch);
  out << ',' << r.seconds;
  return out.str();
}

struct EvalOptions {
  ProbeConfig probe;
  bool run_probe = true;
  /// Probe on sphere-projected embeddings (default) or on U before projection.
  bool probe_on_projected = true;
  bool clustering = true;
  /// Augmentation for the view pair used by alignment / uniformity.
  AugmentConfig augment;
};

/// Which embedding stage the probe and clustering scores see.
inline const Tensor<double>& probe_input(const Embeddings<double>& emb, bool projected) {
  return projected ? emb.projected : emb.postprocessed;
}

/// Full evaluation of a trained model:
///  - probe and clustering scores on full-graph embeddings;
///  - alignment between two augmented views and uniformity averaged over
///    them, restricted to the validation nodes (all nodes if none).
/// `seconds` is left at 0 for the caller to fill with the training cost.
template <class T>
MetricsReport evaluate_model(const ModelParams<T>& p, const GraphBundle& g, const EvalOptions& opt,
                             std::uint64_t seed) {
  MetricsReport r;
  r.dim = p.encoder.out_dim;
  r.seed = seed;
  r.method = method_name(p.post.tag);

  const Embeddings<T> full_t = embed_full(p, g);
  Embeddings<double> full{full_t.raw.template cast<double>(), full_t.postprocessed.template cast<double>(),
                          full_t.projected.template cast<double>()};
  if (opt.run_probe)
    r.accuracy = linear_probe(probe_input(full, opt.probe_on_projected), g.labels, g.splits, opt.probe,
                              derive_seed(seed, "probe"))
                     .test_accuracy;

  const Tensor<T> x = g.features.cast<T>();
  const ViewPair<T> views = make_views<T>(g, x, opt.augment, derive_seed(seed, "eval-views"));
  const Tensor<double> u = embed(p, views.first.adjacency, views.first.features).projected.template cast<double>();
  const Tensor<double> v = embed(p, views.second.adjacency, views.second.features).projected.template cast<double>();
  std::vector<std::int64_t> nodes = g.splits.val;
  if (nodes.empty()) {
    nodes.resize(static_cast<std::size_t>(g.n_nodes));
    for (std::int64_t i = 0; i < g.n_nodes; ++i) nodes[static_cast<std::size_t>(i)] = i;
  }
  const Tensor<double> uv = detail::take_rows(u, nodes);
  const Tensor<double> vv = detail::take_rows(v, nodes);
  r.align = alignment(uv, vv);
  if (uv.rows() >= 2) r.unif = 0.5 * (uniformity(uv) + uniformity(vv));

  if (opt.clustering) {
    try {
      r.sc = silhouette(full.projected, g.labels);
      r.db = davies_bouldin(full.projected, g.labels);
      r.ch = calinski_harabasz(full.projected, g.labels);
    } catch (const Error&) {
      // Degenerate clusterings leave the scores empty.
    }
  }
  return r;
}

}  // namespace clnr
