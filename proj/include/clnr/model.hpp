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
 * @file model.hpp
 * @brief Shared encoder, embedding postprocessors and hypersphere projection.
 *
 * Pipeline for one view: X --encode--> Z --postprocess--> U --project--> rows on S^{F-1}.
 *
 * Postprocessors:
 *   none    U = Z
 *   bn      column standardization with population moments and an eps floor
 *   dbn     ZCA whitening, Sigma^{-1/2} by coupled Newton-Schulz iteration
 *   mlp     row-wise two-layer head, U = act(Z W1) W2
 *   mlp_bn  mlp followed by bn
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "clnr/autodiff.hpp"
#include "clnr/errors.hpp"
#include "clnr/graph.hpp"
#include "clnr/rng.hpp"
#include "clnr/tensor.hpp"

namespace clnr {

enum class Arch { kGcn, kMlp };

enum class Postprocessor { kNone, kBn, kDbn, kMlp, kMlpBn };

inline std::string to_string(Arch a) { return a == Arch::kGcn ? "gcn" : "mlp"; }

inline Arch parse_arch(const std::string& s) {
  if (s == "gcn") return Arch::kGcn;
  if (s == "mlp") return Arch::kMlp;
  throw ConfigError("unknown encoder '" + s + "' (expected gcn|mlp)");
}

inline std::string to_string(ad::Activation a) {
  switch (a) {
    case ad::Activation::kRelu: return "relu";
    case ad::Activation::kElu: return "elu";
    case ad::Activation::kPRelu: return "prelu";
  }
  return "?";
}

inline ad::Activation parse_activation(const std::string& s) {
  if (s == "relu") return ad::Activation::kRelu;
  if (s == "elu") return ad::Activation::kElu;
  if (s == "prelu") return ad::Activation::kPRelu;
  throw ConfigError("unknown activation '" + s + "' (expected relu|elu|prelu)");
}

inline std::string to_string(Postprocessor p) {
  switch (p) {
    case Postprocessor::kNone: return "none";
    case Postprocessor::kBn: return "bn";
    case Postprocessor::kDbn: return "dbn";
    case Postprocessor::kMlp: return "mlp";
    case Postprocessor::kMlpBn: return "mlp_bn";
  }
  return "?";
}

inline Postprocessor parse_postprocessor(const std::string& s) {
  if (s == "none") return Postprocessor::kNone;
  if (s == "bn") return Postprocessor::kBn;
  if (s == "dbn") return Postprocessor::kDbn;
  if (s == "mlp") return Postprocessor::kMlp;
  if (s == "mlp_bn") return Postprocessor::kMlpBn;
  throw ConfigError("unknown postprocessor '" + s + "' (expected none|bn|dbn|mlp|mlp_bn)");
}

/// Display name of the method a postprocessor choice corresponds to.
inline std::string method_name(Postprocessor p) {
  switch (p) {
    case Postprocessor::kNone: return "nCLNR";
    case Postprocessor::kBn: return "CLNR";
    case Postprocessor::kDbn: return "dCLNR";
    case Postprocessor::kMlp: return "GRACE";
    case Postprocessor::kMlpBn: return "GCLNR";
  }
  return "?";
}

struct EncoderConfig {
  Arch arch = Arch::kGcn;
  int n_layers = 2;
  std::int64_t hidden_dim = 512;
  std::int64_t out_dim = 512;
  ad::Activation activation = ad::Activation::kRelu;

  void validate() const {
    if (n_layers < 1 || n_layers > 3) throw ConfigError("encoder layers must be 1, 2 or 3");
    if (hidden_dim <= 0 || out_dim <= 0) throw ConfigError("encoder dims must be positive");
  }
};

struct PostprocessorKind {
  Postprocessor tag = Postprocessor::kBn;
  int newton_schulz_iters = 5;
  /// 0 means "same as the embedding dimension".
  std::int64_t head_hidden = 0;
  ad::Activation head_activation = ad::Activation::kElu;

  bool has_head() const { return tag == Postprocessor::kMlp || tag == Postprocessor::kMlpBn; }
};

template <class T>
struct ModelParams {
  EncoderConfig encoder;
  PostprocessorKind post;
  std::int64_t in_dim = 0;
  std::vector<Tensor<T>> layers;
  /// One 1x1 slope per layer when the encoder activation is prelu.
  std::vector<Tensor<T>> slopes;
  /// {W1, W2} for the mlp heads, empty otherwise.
  std::vector<Tensor<T>> head;
  T bn_eps = T(1e-5);
  std::uint64_t seed = 0;

  /// Every trainable tensor with a stable name, in a fixed order.
  std::vector<std::pair<std::string, Tensor<T>*>> named_tensors() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    for (std::size_t i = 0; i < layers.size(); ++i)
      out.emplace_back("encoder.w" + std::to_string(i), &layers[i]);
    for (std::size_t i = 0; i < slopes.size(); ++i)
      out.emplace_back("encoder.slope" + std::to_string(i), &slopes[i]);
    for (std::size_t i = 0; i < head.size(); ++i)
      out.emplace_back("head.w" + std::to_string(i), &head[i]);
    return out;
  }

  std::vector<std::pair<std::string, const Tensor<T>*>> named_tensors() const {
    std::vector<std::pair<std::string, const Tensor<T>*>> out;
    for (auto& [name, w] : const_cast<ModelParams*>(this)->named_tensors()) out.emplace_back(name, w);
    return out;
  }

  std::int64_t head_parameter_count() const {
    std::int64_t n = 0;
    for (const auto& w : head) n += w.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& w : layers)
      if (!w.allFinite()) return false;
    for (const auto& w : slopes)
      if (!w.allFinite()) return false;
    for (const auto& w : head)
      if (!w.allFinite()) return false;
    return true;
  }

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    out.encoder = encoder;
    out.post = post;
    out.in_dim = in_dim;
    for (const auto& w : layers) out.layers.push_back(w.template cast<U>());
    for (const auto& w : slopes) out.slopes.push_back(w.template cast<U>());
    for (const auto& w : head) out.head.push_back(w.template cast<U>());
    out.bn_eps = static_cast<U>(bn_eps);
    out.seed = seed;
    return out;
  }
};

/// Glorot-uniform matrix: entries uniform on +-sqrt(6 / (fan_in + fan_out)).
template <class T>
Tensor<T> glorot_uniform(std::int64_t fan_in, std::int64_t fan_out, Engine& eng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> w(fan_in, fan_out);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      w(i, j) = static_cast<T>((2.0 * uniform01(eng) - 1.0) * limit);
  return w;
}

template <class T>
ModelParams<T> init_params(const EncoderConfig& cfg, const PostprocessorKind& kind,
                           std::int64_t in_dim, std::uint64_t seed) {
  cfg.validate();
  if (in_dim <= 0) throw ConfigError("input feature dimension must be positive");
  ModelParams<T> p;
  p.encoder = cfg;
  p.post = kind;
  p.in_dim = in_dim;
  p.seed = seed;
  std::int64_t fan_in = in_dim;
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::int64_t fan_out = l + 1 == cfg.n_layers ? cfg.out_dim : cfg.hidden_dim;
    Engine eng = make_engine(derive_seed(seed, "init-layer", static_cast<std::uint64_t>(l)));
    p.layers.push_back(glorot_uniform<T>(fan_in, fan_out, eng));
    if (cfg.activation == ad::Activation::kPRelu) p.slopes.push_back(scalar_tensor<T>(T(0.25)));
    fan_in = fan_out;
  }
  if (kind.has_head()) {
    const std::int64_t hidden = kind.head_hidden > 0 ? kind.head_hidden : cfg.out_dim;
    Engine eng = make_engine(derive_seed(seed, "init-head"));
    p.head.push_back(glorot_uniform<T>(cfg.out_dim, hidden, eng));
    p.head.push_back(glorot_uniform<T>(hidden, cfg.out_dim, eng));
  }
  return p;
}

/// Parameters placed on a tape as gradient-tracked leaves (or constants).
template <class T>
struct BoundParams {
  std::vector<ad::Var<T>> layers;
  std::vector<ad::Var<T>> slopes;
  std::vector<ad::Var<T>> head;

  /// All vars in the order of ModelParams::named_tensors().
  std::vector<ad::Var<T>> all() const {
    std::vector<ad::Var<T>> out(layers);
    out.insert(out.end(), slopes.begin(), slopes.end());
    out.insert(out.end(), head.begin(), head.end());
    return out;
  }
};

template <class T>
BoundParams<T> bind(ad::Tape<T>& tape, const ModelParams<T>& p, bool trainable = true) {
  auto put = [&](const Tensor<T>& w) { return trainable ? tape.parameter(w) : tape.constant(w); };
  BoundParams<T> b;
  for (const auto& w : p.layers) b.layers.push_back(put(w));
  for (const auto& w : p.slopes) b.slopes.push_back(put(w));
  for (const auto& w : p.head) b.head.push_back(put(w));
  return b;
}

/// Raw embeddings Z. gcn: H <- act(A_hat H W_l) per layer; mlp: the same
/// without A_hat. The activation follows every layer, the last included.
template <class T>
ad::Var<T> encode(const ModelParams<T>& p, const BoundParams<T>& b,
                  const NormalizedAdjacency<T>* adj, const ad::Var<T>& x) {
  if (x.cols() != p.in_dim)
    throw ShapeError("encode: features have " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(p.in_dim));
  if (p.encoder.arch == Arch::kGcn) {
    if (adj == nullptr) throw ContractError("encode: gcn encoder needs an adjacency");
    if (adj->matrix.rows != x.rows())
      throw ShapeError("encode: adjacency has " + std::to_string(adj->matrix.rows) +
                       " nodes, features have " + std::to_string(x.rows()));
  }
  ad::Var<T> h = x;
  for (std::size_t l = 0; l < b.layers.size(); ++l) {
    h = ad::matmul(h, b.layers[l]);
    if (p.encoder.arch == Arch::kGcn) h = ad::spmm(adj->matrix, h);
    const ad::Var<T>* slope = b.slopes.empty() ? nullptr : &b.slopes[l];
    h = ad::activation(p.encoder.activation, h, slope);
  }
  return h;
}

/// (Z - mean) / sqrt(var + eps), columnwise, population moments.
template <class T>
ad::Var<T> standardize_columns(const ad::Var<T>& z, T eps) {
  auto [mean, var] = ad::column_moments(z);
  return ad::mul_row(ad::sub_row(z, mean), ad::rsqrt_eps(var, eps));
}

/// (Z - mean) Sigma^{-1/2}, Sigma the population covariance plus eps I.
///
/// Sigma is pre-scaled by its Frobenius norm c so that every eigenvalue of
/// A = Sigma / c lies in (0, 1]; the coupled iteration
///   T_k = (3I - Z_k Y_k) / 2,  Y_{k+1} = Y_k T_k,  Z_{k+1} = T_k Z_k
/// from Y_0 = A, Z_0 = I drives Z_k to A^{-1/2}, and Sigma^{-1/2} = Z_k / sqrt(c).
template <class T>
ad::Var<T> whiten_columns(const ad::Var<T>& z, int iters, T eps) {
  if (iters < 1) throw ConfigError("Newton-Schulz iteration count must be positive");
  ad::Tape<T>& tape = *z.tape;
  const auto n = z.rows();
  const auto f = z.cols();
  ad::Var<T> centered = ad::sub_row(z, ad::column_mean(z));
  ad::Var<T> cov = ad::scale(ad::matmul(ad::transpose(centered), centered), T(1) / T(n));
  cov = ad::affine_identity(cov, T(1), eps);
  ad::Var<T> norm = ad::frobenius_norm(cov);
  ad::Var<T> y = ad::mul_scalar(cov, ad::pow_scalar(norm, T(-1)));
  ad::Var<T> zk = tape.constant(Tensor<T>::Identity(f, f));
  for (int k = 0; k < iters; ++k) {
    ad::Var<T> t = ad::affine_identity(ad::matmul(zk, y), T(-0.5), T(1.5));
    y = ad::matmul(y, t);
    zk = ad::matmul(t, zk);
  }
  ad::Var<T> inv_sqrt = ad::mul_scalar(zk, ad::pow_scalar(norm, T(-0.5)));
  return ad::matmul(centered, inv_sqrt);
}

template <class T>
ad::Var<T> mlp_head(const ModelParams<T>& p, const BoundParams<T>& b, const ad::Var<T>& z) {
  if (b.head.size() != 2) throw ContractError("mlp postprocessor needs head weights");
  ad::Var<T> h = ad::activation(p.post.head_activation, ad::matmul(z, b.head[0]));
  return ad::matmul(h, b.head[1]);
}

template <class T>
ad::Var<T> postprocess(const ModelParams<T>& p, const BoundParams<T>& b, const ad::Var<T>& z) {
  switch (p.post.tag) {
    case Postprocessor::kNone:
      return z;
    case Postprocessor::kBn:
      return standardize_columns(z, p.bn_eps);
    case Postprocessor::kDbn:
      return whiten_columns(z, p.post.newton_schulz_iters, p.bn_eps);
    case Postprocessor::kMlp:
      return mlp_head(p, b, z);
    case Postprocessor::kMlpBn:
      return standardize_columns(mlp_head(p, b, z), p.bn_eps);
  }
  throw ContractError("unknown postprocessor");
}

inline constexpr double kSphereEps = 1e-12;

/// Rows scaled to unit length; rows shorter than 1e-12 stay near zero.
template <class T>
ad::Var<T> project_sphere(const ad::Var<T>& u) {
  return ad::normalize_rows(u, static_cast<T>(kSphereEps));
}

template <class T>
Tensor<T> project_sphere(const Tensor<T>& u) {
  ad::Tape<T> tape;
  return project_sphere(tape.constant(u)).value();
}

/// Embeddings of one forward pass at each pipeline stage.
template <class T>
struct Embeddings {
  Tensor<T> raw;            // Z
  Tensor<T> postprocessed;  // U
  Tensor<T> projected;      // U with unit rows
};

/// Forward pass of one (features, adjacency) pair without gradients.
template <class T>
Embeddings<T> embed(const ModelParams<T>& p, const NormalizedAdjacency<T>& adj,
                    const Tensor<T>& features) {
  ad::Tape<T> tape;
  BoundParams<T> b = bind(tape, p, false);
  ad::Var<T> z = encode(p, b, &adj, tape.constant(features));
  ad::Var<T> u = postprocess(p, b, z);
  ad::Var<T> s = project_sphere(u);
  return Embeddings<T>{z.value(), u.value(), s.value()};
}

/// Inference embeddings of the whole graph: no augmentation, postprocessing
/// statistics over all nodes.
template <class T>
Embeddings<T> embed_full(const ModelParams<T>& p, const GraphBundle& g) {
  return embed(p, normalize_adjacency<T>(g.adjacency), g.features.cast<T>().eval());
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   clnr-ckpt v1
//   key = value            (meta lines)
//   tensors = K
//   then K times: "<name> <rows> <cols>\n" followed by rows*cols little-endian f64

template <class T>
void save_checkpoint(const std::filesystem::path& path, const ModelParams<T>& p,
                     const std::map<std::string, std::string>& extra = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint " + path.string());
  const std::int64_t head_hidden = p.head.empty() ? 0 : p.head[0].cols();
  std::map<std::string, std::string> meta = extra;
  meta["arch"] = to_string(p.encoder.arch);
  meta["layers"] = std::to_string(p.encoder.n_layers);
  meta["in_dim"] = std::to_string(p.in_dim);
  meta["hidden_dim"] = std::to_string(p.encoder.hidden_dim);
  meta["out_dim"] = std::to_string(p.encoder.out_dim);
  meta["activation"] = to_string(p.encoder.activation);
  meta["kind"] = to_string(p.post.tag);
  meta["newton_schulz_iters"] = std::to_string(p.post.newton_schulz_iters);
  meta["head_hidden"] = std::to_string(head_hidden);
  meta["head_activation"] = to_string(p.post.head_activation);
  meta["seed"] = std::to_string(p.seed);
  {
    std::ostringstream eps;
    eps.precision(17);
    eps << static_cast<double>(p.bn_eps);
    meta["bn_eps"] = eps.str();
  }
  out << "clnr-ckpt v1\n";
  for (const auto& [k, v] : meta) out << k << " = " << v << "\n";
  const auto tensors = p.named_tensors();
  out << "tensors = " << tensors.size() << "\n";
  for (const auto& [name, w] : tensors) {
    out << name << " " << w->rows() << " " << w->cols() << "\n";
    for (Eigen::Index i = 0; i < w->rows(); ++i)
      for (Eigen::Index j = 0; j < w->cols(); ++j)
        detail::write_le<double>(out, static_cast<double>((*w)(i, j)));
  }
}

struct Checkpoint {
  ModelParams<double> params;
  std::map<std::string, std::string> meta;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "clnr-ckpt v1")
    throw LoadError(path.string() + ": not a clnr-ckpt v1 file");
  Checkpoint ck;
  std::int64_t n_tensors = -1;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw LoadError(path.string() + ": bad meta line '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "tensors") {
      n_tensors = detail::parse_int(val, "checkpoint tensors");
      break;
    }
    ck.meta[key] = val;
  }
  if (n_tensors < 0) throw LoadError(path.string() + ": missing tensor table");
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = ck.meta.find(k);
    if (it == ck.meta.end()) throw LoadError(path.string() + ": missing meta key '" + k + "'");
    return it->second;
  };
  auto& p = ck.params;
  try {
    p.encoder.arch = parse_arch(need("arch"));
    p.encoder.n_layers = static_cast<int>(detail::parse_int(need("layers"), "layers"));
    p.encoder.hidden_dim = detail::parse_int(need("hidden_dim"), "hidden_dim");
    p.encoder.out_dim = detail::parse_int(need("out_dim"), "out_dim");
    p.encoder.activation = parse_activation(need("activation"));
    p.post.tag = parse_postprocessor(need("kind"));
    p.post.newton_schulz_iters =
        static_cast<int>(detail::parse_int(need("newton_schulz_iters"), "newton_schulz_iters"));
    p.post.head_hidden = detail::parse_int(need("head_hidden"), "head_hidden");
    p.post.head_activation = parse_activation(need("head_activation"));
    p.in_dim = detail::parse_int(need("in_dim"), "in_dim");
    p.seed = static_cast<std::uint64_t>(std::stoull(need("seed")));
    p.bn_eps = std::stod(need("bn_eps"));
  } catch (const ConfigError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  for (std::int64_t t = 0; t < n_tensors; ++t) {
    if (!std::getline(in, line)) throw LoadError(path.string() + ": truncated tensor table");
    std::istringstream hs(line);
    std::string name;
    std::int64_t rows = 0, cols = 0;
    if (!(hs >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw LoadError(path.string() + ": bad tensor header '" + line + "'");
    Tensor<double> w(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = detail::read_le<double>(in);
    if (name.rfind("encoder.w", 0) == 0)
      p.layers.push_back(std::move(w));
    else if (name.rfind("encoder.slope", 0) == 0)
      p.slopes.push_back(std::move(w));
    else if (name.rfind("head.w", 0) == 0)
      p.head.push_back(std::move(w));
    else
      throw LoadError(path.string() + ": unknown tensor '" + name + "'");
  }
  if (static_cast<int>(p.layers.size()) != p.encoder.n_layers)
    throw LoadError(path.string() + ": layer count does not match meta");
  if (!p.all_finite()) throw LoadError(path.string() + ": non-finite weights");
  return ck;
}

}  // namespace clnr
