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
 * @file graph.hpp
 * @brief Transductive graph datasets: in-memory bundle, on-disk format,
 * GCN propagation matrix, edge-noise injection and an SBM generator.
 *
 * Bundle directory layout:
 *
 *   meta.txt      key = value lines: n_nodes, n_edges_directed, feature_dim, n_classes
 *   edges.tsv     one undirected edge per line, "src<TAB>dst", src < dst, 0-based
 *   features.tsv  one node per line, feature_dim tab-separated reals
 *   features.bin  u64 rows, u64 cols (little endian), then rows*cols f32, row-major
 *   labels.tsv    one integer per line
 *   train.idx / val.idx / test.idx   one node index per line
 *
 * If both feature files exist the binary one is read.
 */

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <type_traits>
#include <unordered_set>
#include <utility>
#include <vector>

#include "clnr/errors.hpp"
#include "clnr/rng.hpp"
#include "clnr/tensor.hpp"

namespace clnr {

using Edge = std::pair<std::int64_t, std::int64_t>;

struct Splits {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> val;
  std::vector<std::int64_t> test;
};

struct GraphBundle {
  std::int64_t n_nodes = 0;
  std::int64_t feature_dim = 0;
  std::int64_t n_classes = 0;
  /// Symmetric 0/1 matrix, no stored self-loops.
  SparseMatrix<double> adjacency;
  Tensor<double> features;
  std::vector<std::int64_t> labels;
  Splits splits;

  std::int64_t directed_edges() const { return adjacency.nnz(); }
  std::int64_t undirected_edges() const { return adjacency.nnz() / 2; }
};

/// D^{-1/2} (A + I) D^{-1/2}, D the degree matrix of A + I.
template <class T>
struct NormalizedAdjacency {
  SparseMatrix<T> matrix;
};

// ---------------------------------------------------------------------------
// Adjacency helpers

/// Symmetric CSR from undirected edges. Duplicates collapse; self-loops throw.
inline SparseMatrix<double> adjacency_from_edges(std::int64_t n, const std::vector<Edge>& edges) {
  std::vector<std::tuple<std::int64_t, std::int64_t, double>> trips;
  trips.reserve(edges.size() * 2);
  for (const auto& [a, b] : edges) {
    if (a == b) throw ContractError("self-loop on node " + std::to_string(a));
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw ShapeError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                       ") out of range for " + std::to_string(n) + " nodes");
    trips.emplace_back(a, b, 1.0);
    trips.emplace_back(b, a, 1.0);
  }
  return SparseMatrix<double>::from_triplets(n, n, std::move(trips));
}

/// Undirected edge list (src < dst) of a symmetric adjacency, sorted.
template <class T>
std::vector<Edge> undirected_edges(const SparseMatrix<T>& a) {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(a.nnz() / 2));
  for (std::int64_t r = 0; r < a.rows; ++r)
    for (std::int64_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
      if (a.indices[k] > r) out.emplace_back(r, a.indices[k]);
  return out;
}

template <class T>
NormalizedAdjacency<T> normalize_adjacency(const SparseMatrix<double>& a) {
  if (a.rows != a.cols) throw ShapeError("normalize_adjacency: adjacency must be square");
  const std::int64_t n = a.rows;
  std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    double d = 1.0;  // self-loop
    for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k)
      if (a.indices[k] != i) d += a.values[k];
    inv_sqrt_deg[i] = 1.0 / std::sqrt(d);
  }
  SparseMatrix<T> out;
  out.rows = out.cols = n;
  out.offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  out.indices.reserve(static_cast<std::size_t>(a.nnz() + n));
  out.values.reserve(static_cast<std::size_t>(a.nnz() + n));
  for (std::int64_t i = 0; i < n; ++i) {
    bool diag_done = false;
    auto emit_diag = [&] {
      out.indices.push_back(i);
      out.values.push_back(static_cast<T>(inv_sqrt_deg[i] * inv_sqrt_deg[i]));
      diag_done = true;
    };
    for (std::int64_t k = a.offsets[i]; k < a.offsets[i + 1]; ++k) {
      const std::int64_t j = a.indices[k];
      if (j == i) continue;
      if (!diag_done && j > i) emit_diag();
      out.indices.push_back(j);
      out.values.push_back(static_cast<T>(a.values[k] * inv_sqrt_deg[i] * inv_sqrt_deg[j]));
    }
    if (!diag_done) emit_diag();
    out.offsets[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(out.indices.size());
  }
  return NormalizedAdjacency<T>{std::move(out)};
}

/// Adds exactly floor(|A| p) new undirected edges, |A| the undirected edge
/// count, drawn uniformly without replacement from the absent non-loop
/// pairs. Existing edges are left in place.
inline SparseMatrix<double> perturb_edges(const SparseMatrix<double>& a, double p,
                                          std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ContractError("perturb_edges: rate must be in [0, 1)");
  const std::int64_t n = a.rows;
  std::vector<Edge> edges = undirected_edges(a);
  const auto base = static_cast<std::int64_t>(edges.size());
  const auto add = static_cast<std::int64_t>(std::floor(static_cast<double>(base) * p));
  if (add == 0) return a;
  const std::int64_t all_pairs = n * (n - 1) / 2;
  const std::int64_t absent = all_pairs - base;
  if (add > absent)
    throw CapacityError("perturb_edges: " + std::to_string(add) + " new edges requested but only " +
                        std::to_string(absent) + " absent pairs");

  Engine eng = make_engine(seed);
  auto pair_key = [n](std::int64_t u, std::int64_t v) { return u * n + v; };
  if (add * 4 <= absent) {
    // Sparse regime: rejection against the existing and already-drawn pairs.
    std::unordered_set<std::int64_t> taken;
    taken.reserve(static_cast<std::size_t>(base + add) * 2);
    for (const auto& [u, v] : edges) taken.insert(pair_key(u, v));
    std::int64_t drawn = 0;
    while (drawn < add) {
      auto u = static_cast<std::int64_t>(uniform_index(eng, static_cast<std::uint64_t>(n)));
      auto v = static_cast<std::int64_t>(uniform_index(eng, static_cast<std::uint64_t>(n)));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (!taken.insert(pair_key(u, v)).second) continue;
      edges.emplace_back(u, v);
      ++drawn;
    }
  } else {
    // Dense regime: enumerate absent pairs, partial Fisher-Yates.
    std::vector<Edge> candidates;
    candidates.reserve(static_cast<std::size_t>(absent));
    for (std::int64_t u = 0; u < n; ++u)
      for (std::int64_t v = u + 1; v < n; ++v)
        if (!a.has(u, v)) candidates.emplace_back(u, v);
    for (std::int64_t k = 0; k < add; ++k) {
      const auto j = k + static_cast<std::int64_t>(
                             uniform_index(eng, static_cast<std::uint64_t>(absent - k)));
      std::swap(candidates[k], candidates[j]);
      edges.push_back(candidates[k]);
    }
  }
  return adjacency_from_edges(n, edges);
}

// ---------------------------------------------------------------------------
// Splits

/// Per-class shuffled split with the given train/val fractions; the rest is
/// test. Classes with at least three members get at least one node in each
/// part.
inline Splits stratified_split(const std::vector<std::int64_t>& labels, std::int64_t n_classes,
                               std::uint64_t seed, double train_frac = 0.1,
                               double val_frac = 0.1) {
  std::vector<std::vector<std::int64_t>> members(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::int64_t>(i));
  Engine eng = make_engine(seed);
  Splits s;
  for (auto& m : members) {
    for (std::size_t k = m.size(); k > 1; --k)
      std::swap(m[k - 1], m[uniform_index(eng, k)]);
    const auto n = static_cast<std::int64_t>(m.size());
    auto n_train = static_cast<std::int64_t>(std::llround(n * train_frac));
    auto n_val = static_cast<std::int64_t>(std::llround(n * val_frac));
    if (n >= 3) {
      n_train = std::max<std::int64_t>(n_train, 1);
      n_val = std::max<std::int64_t>(n_val, 1);
    }
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);
    s.train.insert(s.train.end(), m.begin(), m.begin() + n_train);
    s.val.insert(s.val.end(), m.begin() + n_train, m.begin() + n_train + n_val);
    s.test.insert(s.test.end(), m.begin() + n_train + n_val, m.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------
// Stochastic block model

struct SbmConfig {
  std::vector<std::int64_t> block_sizes;
  double p_in = 0.1;
  double p_out = 0.01;
  double class_mean_shift = 1.0;
  double noise_std = 1.0;
  std::uint64_t seed = 0;
  /// Feature width; 0 means one column per block. Extra columns carry noise only.
  std::int64_t feature_dim = 0;
};

/// Planted-partition graph with Gaussian features around one-hot class means
/// and a stratified 1:1:8 split.
inline GraphBundle generate_sbm(const SbmConfig& cfg) {
  if (cfg.block_sizes.empty()) throw ContractError("generate_sbm: no blocks");
  if (cfg.p_in < 0 || cfg.p_in > 1 || cfg.p_out < 0 || cfg.p_out > 1)
    throw ContractError("generate_sbm: probabilities must be in [0, 1]");
  GraphBundle g;
  g.n_classes = static_cast<std::int64_t>(cfg.block_sizes.size());
  for (std::int64_t b = 0; b < g.n_classes; ++b) {
    if (cfg.block_sizes[b] <= 0) throw ContractError("generate_sbm: empty block");
    g.labels.insert(g.labels.end(), static_cast<std::size_t>(cfg.block_sizes[b]), b);
  }
  g.n_nodes = static_cast<std::int64_t>(g.labels.size());
  g.feature_dim = cfg.feature_dim > 0 ? cfg.feature_dim : g.n_classes;
  if (g.feature_dim < g.n_classes)
    throw ContractError("generate_sbm: feature_dim smaller than the number of blocks");

  Engine edge_eng = make_engine(derive_seed(cfg.seed, "sbm-edges"));
  std::vector<Edge> edges;
  for (std::int64_t u = 0; u < g.n_nodes; ++u)
    for (std::int64_t v = u + 1; v < g.n_nodes; ++v) {
      const double p = g.labels[u] == g.labels[v] ? cfg.p_in : cfg.p_out;
      if (bernoulli(edge_eng, p)) edges.emplace_back(u, v);
    }
  g.adjacency = adjacency_from_edges(g.n_nodes, edges);

  Engine feat_eng = make_engine(derive_seed(cfg.seed, "sbm-features"));
  std::normal_distribution<double> noise(0.0, 1.0);
  g.features.resize(g.n_nodes, g.feature_dim);
  for (std::int64_t i = 0; i < g.n_nodes; ++i)
    for (std::int64_t j = 0; j < g.feature_dim; ++j) {
      const double mean = j == g.labels[i] ? cfg.class_mean_shift : 0.0;
      g.features(i, j) = cfg.noise_std > 0 ? mean + cfg.noise_std * noise(feat_eng) : mean;
    }
  g.splits = stratified_split(g.labels, g.n_classes, derive_seed(cfg.seed, "sbm-split"));
  return g;
}

// ---------------------------------------------------------------------------
// Validation

/// Every violated invariant, one message each. Empty means valid.
inline std::vector<std::string> validate_bundle(const GraphBundle& g) {
  std::vector<std::string> issues;
  const auto& a = g.adjacency;
  if (a.rows != g.n_nodes || a.cols != g.n_nodes)
    issues.push_back("adjacency is " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     ", expected " + std::to_string(g.n_nodes) + " square");
  else {
    if (!a.is_symmetric()) issues.push_back("adjacency is not symmetric");
    for (std::int64_t i = 0; i < a.rows; ++i)
      if (a.has(i, i)) {
        issues.push_back("adjacency stores a self-loop on node " + std::to_string(i));
        break;
      }
  }
  if (g.features.rows() != g.n_nodes || g.features.cols() != g.feature_dim)
    issues.push_back("features are " + shape_of(g.features) + ", expected " +
                     std::to_string(g.n_nodes) + "x" + std::to_string(g.feature_dim));
  if (!g.features.allFinite()) issues.push_back("features contain non-finite values");
  if (static_cast<std::int64_t>(g.labels.size()) != g.n_nodes)
    issues.push_back("labels length " + std::to_string(g.labels.size()) + " != n_nodes");
  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] < 0 || g.labels[i] >= g.n_classes) {
      issues.push_back("label " + std::to_string(g.labels[i]) + " on node " + std::to_string(i) +
                       " outside [0, " + std::to_string(g.n_classes) + ")");
      break;
    }
  const std::pair<const char*, const std::vector<std::int64_t>*> parts[] = {
      {"train", &g.splits.train}, {"val", &g.splits.val}, {"test", &g.splits.test}};
  std::vector<int> owner(static_cast<std::size_t>(std::max<std::int64_t>(g.n_nodes, 0)), -1);
  bool overlap_reported = false;
  for (int p = 0; p < 3; ++p) {
    for (std::int64_t idx : *parts[p].second) {
      if (idx < 0 || idx >= g.n_nodes) {
        issues.push_back(std::string(parts[p].first) + " split index " + std::to_string(idx) +
                         " out of range");
        break;
      }
      int& o = owner[static_cast<std::size_t>(idx)];
      if (o != -1 && !overlap_reported) {
        issues.push_back(std::string("node ") + std::to_string(idx) + " appears in both " +
                         parts[o].first + " and " + parts[p].first + " splits");
        overlap_reported = true;
      }
      o = p;
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Disk format

namespace detail {

inline std::ifstream open_in(const std::filesystem::path& p, bool binary = false) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw LoadError("cannot open " + p.string());
  return in;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Parses `key = value` lines; '#' starts a comment.
inline std::map<std::string, std::string> read_key_values(std::istream& in,
                                                          const std::string& what) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(what + ":" + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw LoadError(what + ": not an integer: '" + s + "'");
  }
}

inline std::vector<std::int64_t> read_index_file(const std::filesystem::path& p) {
  auto in = open_in(p);
  std::vector<std::int64_t> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    out.push_back(parse_int(line, p.filename().string()));
  }
  return out;
}

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw LoadError("truncated binary header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

template <class F>
void write_le(std::ostream& out, F value) {
  static_assert(sizeof(F) == 4 || sizeof(F) == 8);
  using U = std::conditional_t<sizeof(F) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  unsigned char b[sizeof(F)];
  for (std::size_t i = 0; i < sizeof(F); ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(F));
}

template <class F>
F read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(F) == 4, std::uint32_t, std::uint64_t>;
  unsigned char b[sizeof(F)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(F))) throw LoadError("truncated binary data");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(F); ++i) bits |= static_cast<U>(b[i]) << (8 * i);
  return std::bit_cast<F>(bits);
}

}  // namespace detail

/// Dense matrix in the features.bin layout (u64 rows, u64 cols, f32 data).
template <class T>
void write_matrix_bin(const std::filesystem::path& p, const Tensor<T>& m) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw LoadError("cannot write " + p.string());
  detail::write_u64_le(out, static_cast<std::uint64_t>(m.rows()));
  detail::write_u64_le(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      detail::write_le<float>(out, static_cast<float>(m(i, j)));
}

inline Tensor<double> read_matrix_bin(const std::filesystem::path& p) {
  auto in = detail::open_in(p, true);
  const auto rows = detail::read_u64_le(in);
  const auto cols = detail::read_u64_le(in);
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (size != 16 + rows * cols * 4)
    throw LoadError(p.string() + ": size " + std::to_string(size) + " does not match header " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  in.seekg(16);
  Tensor<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = detail::read_le<float>(in);
  return m;
}

inline GraphBundle load_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw LoadError("bundle directory not found: " + dir.string());
  GraphBundle g;

  std::map<std::string, std::string> meta;
  {
    auto in = detail::open_in(dir / "meta.txt");
    try {
      meta = detail::read_key_values(in, "meta.txt");
    } catch (const ConfigError& e) {
      throw LoadError(e.what());
    }
  }
  auto meta_int = [&meta](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw LoadError("meta.txt: missing key '" + key + "'");
    return detail::parse_int(it->second, "meta.txt " + key);
  };
  g.n_nodes = meta_int("n_nodes");
  g.feature_dim = meta_int("feature_dim");
  g.n_classes = meta_int("n_classes");
  const std::int64_t directed = meta_int("n_edges_directed");
  if (g.n_nodes < 0 || g.feature_dim < 0 || g.n_classes <= 0)
    throw LoadError("meta.txt: sizes must be nonnegative and n_classes positive");

  std::vector<Edge> edges;
  {
    auto in = detail::open_in(dir / "edges.tsv");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = detail::trim(line);
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string a, b, extra;
      if (!std::getline(ls, a, '\t') || !std::getline(ls, b, '\t') || std::getline(ls, extra))
        throw LoadError("edges.tsv:" + std::to_string(lineno) + ": expected src<TAB>dst");
      const auto u = detail::parse_int(detail::trim(a), "edges.tsv");
      const auto v = detail::parse_int(detail::trim(b), "edges.tsv");
      const std::string where = "edges.tsv:" + std::to_string(lineno) + ": ";
      if (u < 0 || v < 0 || u >= g.n_nodes || v >= g.n_nodes)
        throw LoadError(where + "node index out of range");
      if (u == v) throw LoadError(where + "self-loop on node " + std::to_string(u));
      if (u > v)
        throw LoadError(where + "edge (" + std::to_string(u) + "," + std::to_string(v) +
                        ") is not in src < dst form; the edge list must be undirected");
      edges.emplace_back(u, v);
    }
  }
  g.adjacency = adjacency_from_edges(g.n_nodes, edges);
  if (g.adjacency.nnz() != directed)
    throw LoadError("meta.txt: n_edges_directed = " + std::to_string(directed) +
                    " but edges.tsv yields " + std::to_string(g.adjacency.nnz()) +
                    " directed edges");

  if (fs::exists(dir / "features.bin")) {
    g.features = read_matrix_bin(dir / "features.bin");
  } else {
    auto in = detail::open_in(dir / "features.tsv");
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(g.n_nodes * g.feature_dim));
    std::string line;
    std::int64_t rows = 0;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      std::istringstream ls(line);
      std::string cell;
      std::int64_t cols = 0;
      while (std::getline(ls, cell, '\t')) {
        char* end = nullptr;
        const std::string c = detail::trim(cell);
        const double v = std::strtod(c.c_str(), &end);
        if (c.empty() || end != c.c_str() + c.size())
          throw LoadError("features.tsv:" + std::to_string(rows + 1) + ": bad number '" + c + "'");
        vals.push_back(v);
        ++cols;
      }
      if (cols != g.feature_dim)
        throw LoadError("features.tsv:" + std::to_string(rows + 1) + ": " + std::to_string(cols) +
                        " columns, expected " + std::to_string(g.feature_dim));
      ++rows;
    }
    g.features.resize(rows, g.feature_dim);
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t j = 0; j < g.feature_dim; ++j)
        g.features(i, j) = vals[static_cast<std::size_t>(i * g.feature_dim + j)];
  }
  if (g.features.rows() != g.n_nodes || g.features.cols() != g.feature_dim)
    throw LoadError("features are " + shape_of(g.features) + ", meta says " +
                    std::to_string(g.n_nodes) + "x" + std::to_string(g.feature_dim));
  if (!g.features.allFinite()) throw LoadError("features contain non-finite values");

  g.labels = detail::read_index_file(dir / "labels.tsv");
  if (static_cast<std::int64_t>(g.labels.size()) != g.n_nodes)
    throw LoadError("labels.tsv has " + std::to_string(g.labels.size()) + " lines, expected " +
                    std::to_string(g.n_nodes));
  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] < 0 || g.labels[i] >= g.n_classes)
      throw LoadError("labels.tsv:" + std::to_string(i + 1) + ": label " +
                      std::to_string(g.labels[i]) + " outside [0, " +
                      std::to_string(g.n_classes) + ")");

  g.splits.train = detail::read_index_file(dir / "train.idx");
  g.splits.val = detail::read_index_file(dir / "val.idx");
  g.splits.test = detail::read_index_file(dir / "test.idx");

  if (auto issues = validate_bundle(g); !issues.empty()) throw LoadError(issues.front());
  return g;
}

/// Writes every bundle file. Features go to features.bin when `binary`,
/// else to features.tsv with round-trip precision.
inline void save_bundle(const GraphBundle& g, const std::filesystem::path& dir,
                        bool binary = false) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open_out = [&dir](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw LoadError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open_out("meta.txt");
    out << "n_nodes = " << g.n_nodes << "\n"
        << "n_edges_directed = " << g.directed_edges() << "\n"
        << "feature_dim = " << g.feature_dim << "\n"
        << "n_classes = " << g.n_classes << "\n";
  }
  {
    auto out = open_out("edges.tsv");
    for (const auto& [u, v] : undirected_edges(g.adjacency)) out << u << '\t' << v << '\n';
  }
  if (binary) {
    if (fs::exists(dir / "features.tsv")) fs::remove(dir / "features.tsv");
    write_matrix_bin(dir / "features.bin", g.features);
  } else {
    if (fs::exists(dir / "features.bin")) fs::remove(dir / "features.bin");
    auto out = open_out("features.tsv");
    out.precision(17);
    for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.features.cols(); ++j)
        out << (j ? "\t" : "") << g.features(i, j);
      out << '\n';
    }
  }
  {
    auto out = open_out("labels.tsv");
    for (auto y : g.labels) out << y << '\n';
  }
  auto write_idx = [&](const char* name, const std::vector<std::int64_t>& idx) {
    auto out = open_out(name);
    for (auto i : idx) out << i << '\n';
  };
  write_idx("train.idx", g.splits.train);
  write_idx("val.idx", g.splits.val);
  write_idx("test.idx", g.splits.test);
}

}  // namespace clnr
