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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "clnr/augment.hpp"
#include "clnr/autodiff.hpp"
#include "clnr/errors.hpp"
#include "clnr/graph.hpp"
#include "clnr/model.hpp"
#include "clnr/rng.hpp"
#include "clnr/tensor.hpp"

namespace clnr {

enum class LossKind { kNtXent, kCcaSsg };

inline std::string to_string(LossKind k) { return k == LossKind::kNtXent ? "nt_xent" : "cca_ssg"; }

inline LossKind parse_loss(const std::string& s) {
  if (s == "nt_xent") return LossKind::kNtXent;
  if (s == "cca_ssg") return LossKind::kCcaSsg;
  throw ConfigError("unknown loss '" + s + "' (expected nt_xent|cca_ssg)");
}

// ---------------------------------------------------------------------------
// Losses

/// Negated symmetric NT-Xent over the batch rows of u and v, with cosine
/// similarity and temperature tau. Value to minimize.
template <class T>
ad::Var<T> nt_xent(const ad::Var<T>& u, const ad::Var<T>& v, std::span<const std::int64_t> batch,
                   T tau) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw ShapeError("nt_xent: " + shape_of(u.value()) + " vs " + shape_of(v.value()));
  if (batch.empty()) throw ContractError("nt_xent: empty batch");
  if (static_cast<std::int64_t>(batch.size()) > u.rows())
    throw ContractError("nt_xent: batch larger than the node count");
  std::unordered_set<std::int64_t> seen;
  for (auto i : batch) {
    if (i < 0 || i >= u.rows()) throw ContractError("nt_xent: batch index out of range");
    if (!seen.insert(i).second)
      throw ContractError("nt_xent: duplicate batch index " + std::to_string(i));
  }
  const T eps = static_cast<T>(kSphereEps);
  ad::Var<T> ub = ad::normalize_rows(ad::gather_rows(u, batch), eps);
  ad::Var<T> vb = ad::normalize_rows(ad::gather_rows(v, batch), eps);
  return ad::nt_xent_unit(ub, vb, tau);
}

/// Column-standardize and scale by 1/sqrt(N): the input form the CCA-SSG
/// loss expects, making U^T U a correlation matrix.
template <class T>
ad::Var<T> cca_standardize(const ad::Var<T>& z, T eps = T(1e-5)) {
  return ad::scale(standardize_columns(z, eps), T(1) / std::sqrt(static_cast<T>(z.rows())));
}

/// ||U - V||_F^2 + lambda (||U^T U - I||_F^2 + ||V^T V - I||_F^2).
template <class T>
ad::Var<T> cca_ssg_loss(const ad::Var<T>& u, const ad::Var<T>& v, T lambda) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw ShapeError("cca_ssg_loss: " + shape_of(u.value()) + " vs " + shape_of(v.value()));
  if (lambda < T(0)) throw ContractError("cca_ssg_loss: lambda must be nonnegative");
  ad::Var<T> invariance = ad::sum_squares(ad::sub(u, v));
  auto decorrelation = [](const ad::Var<T>& x) {
    return ad::sum_squares(ad::affine_identity(ad::matmul(ad::transpose(x), x), T(1), T(-1)));
  };
  ad::Var<T> reg = ad::add(decorrelation(u), decorrelation(v));
  return ad::add(invariance, ad::scale(reg, lambda));
}

// ---------------------------------------------------------------------------
// Optimizer

template <class T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with bias correction. Weight decay is coupled L2
/// (g += wd * param) before the moment updates. A non-finite gradient
/// aborts the step before anything is modified.
template <class T>
void adam_step(AdamState<T>& state, std::span<Tensor<T>* const> params,
               std::span<const Tensor<T>> grads, double lr, double wd) {
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i].rows() || params[i]->cols() != grads[i].cols())
      throw ShapeError("adam_step: gradient " + std::to_string(i) + " has shape " +
                       shape_of(grads[i]) + ", parameter " + shape_of(*params[i]));
    if (!grads[i].allFinite())
      throw NumericError("adam_step: non-finite gradient for parameter " + std::to_string(i));
  }
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Tensor<T>::Zero(p->rows(), p->cols()));
      state.v.push_back(Tensor<T>::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameters");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    Tensor<T> g = grads[i];
    if (wd != 0.0) g += static_cast<T>(wd) * p;
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g.cwiseProduct(g);
    const auto mhat = state.m[i].array() / static_cast<T>(bc1);
    const auto vhat = state.v[i].array() / static_cast<T>(bc2);
    p.array() -= static_cast<T>(lr) * mhat / (vhat.sqrt() + static_cast<T>(state.eps));
  }
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  int epochs = 50;
  std::int64_t m = 1024;
  double tau = 0.5;
  double lr = 1e-3;
  double weight_decay = 0.0;
  AugmentConfig augment;
  EncoderConfig encoder;
  PostprocessorKind kind;
  LossKind loss = LossKind::kNtXent;
  double lambda = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (m < 1) throw ConfigError("subsample size m must be at least 1");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight decay must be nonnegative");
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    augment.validate();
    encoder.validate();
  }
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double seconds = 0.0;
};

template <class T>
struct TrainResult {
  ModelParams<T> params;
  std::vector<EpochRecord> history;
  bool aborted = false;
  std::string abort_reason;
};

/// min(m, n) distinct node indices drawn uniformly (partial Fisher-Yates).
inline std::vector<std::int64_t> sample_batch(std::int64_t n, std::int64_t m, std::uint64_t seed) {
  m = std::min(m, n);
  std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) pool[i] = i;
  Engine eng = make_engine(seed);
  for (std::int64_t k = 0; k < m; ++k) {
    const auto j = k + static_cast<std::int64_t>(uniform_index(eng, static_cast<std::uint64_t>(n - k)));
    std::swap(pool[k], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(m));
  return pool;
}

/// Builds the training loss for one view pair on `tape`.
template <class T>
ad::Var<T> pair_loss(ad::Tape<T>& tape, const ModelParams<T>& p, const BoundParams<T>& b,
                     const ViewPair<T>& views, const TrainConfig& cfg,
                     std::span<const std::int64_t> batch) {
  ad::Var<T> z1 = encode(p, b, &views.first.adjacency, tape.constant(views.first.features));
  ad::Var<T> z2 = encode(p, b, &views.second.adjacency, tape.constant(views.second.features));
  ad::Var<T> u = postprocess(p, b, z1);
  ad::Var<T> v = postprocess(p, b, z2);
  if (cfg.loss == LossKind::kCcaSsg)
    return cca_ssg_loss(cca_standardize(u), cca_standardize(v), static_cast<T>(cfg.lambda));
  // Cosine similarity inside nt_xent makes a separate sphere projection a no-op here.
  return nt_xent(u, v, batch, static_cast<T>(cfg.tau));
}

/// Loss of `p` on views and a batch that depend only on `probe_seed`, so it
/// can be compared across training checkpoints.
template <class T>
T fixed_batch_loss(const ModelParams<T>& p, const GraphBundle& g, const TrainConfig& cfg,
                   std::uint64_t probe_seed) {
  const Tensor<T> x = g.features.cast<T>();
  const ViewPair<T> views = make_views<T>(g, x, cfg.augment, derive_seed(probe_seed, "probe-views"));
  const auto batch = sample_batch(g.n_nodes, cfg.m, derive_seed(probe_seed, "probe-batch"));
  ad::Tape<T> tape;
  BoundParams<T> b = bind(tape, p, false);
  return pair_loss(tape, p, b, views, cfg, batch).value()(0, 0);
}

/// Contrastive pretraining: every epoch draws a fresh view pair and a fresh
/// subsample, then takes one Adam step. Deterministic for a fixed seed.
template <class T>
TrainResult<T> train(const GraphBundle& g, const TrainConfig& cfg) {
  cfg.validate();
  if (g.n_nodes < 2) throw DegenerateInputError("train: graph needs at least 2 nodes");
  TrainResult<T> result;
  result.params = init_params<T>(cfg.encoder, cfg.kind, g.feature_dim, derive_seed(cfg.seed, "init"));
  AdamState<T> adam;
  const Tensor<T> x = g.features.cast<T>();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const ViewPair<T> views =
          make_views<T>(g, x, cfg.augment, derive_seed(cfg.seed, "augment", static_cast<std::uint64_t>(epoch)));
      const auto batch =
          sample_batch(g.n_nodes, cfg.m, derive_seed(cfg.seed, "subsample", static_cast<std::uint64_t>(epoch)));
      ad::Tape<T> tape;
      BoundParams<T> b = bind(tape, result.params);
      ad::Var<T> loss = pair_loss(tape, result.params, b, views, cfg, batch);
      const auto grads = tape.backward(loss);
      std::vector<Tensor<T>*> targets;
      std::vector<Tensor<T>> gvals;
      const auto vars = b.all();
      for (auto& [name, w] : result.params.named_tensors()) targets.push_back(w);
      for (const auto& var : vars) gvals.push_back(grads.of(var));
      adam_step<T>(adam, targets, gvals, cfg.lr, cfg.weight_decay);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      result.history.push_back(EpochRecord{epoch, static_cast<double>(loss.value()(0, 0)), secs});
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
  }
  return result;
}

/// history as CSV: epoch,loss,seconds with 6-decimal fixed point.
inline void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,loss,seconds\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : history) out << r.epoch << "," << r.loss << "," << r.seconds << "\n";
}

}  // namespace clnr
