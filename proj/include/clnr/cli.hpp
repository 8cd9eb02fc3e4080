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
 * @file cli.hpp
 * @brief Run configuration and the command implementations behind the
 * `clnr` tool. Argument parsing lives in tools/clnr.cpp.
 */

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clnr/augment.hpp"
#include "clnr/errors.hpp"
#include "clnr/eval.hpp"
#include "clnr/graph.hpp"
#include "clnr/model.hpp"
#include "clnr/objective.hpp"
#include "clnr/rng.hpp"

namespace clnr::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

/// Maps a library error onto the process exit code.
inline int exit_code_for(const Error& e) {
  return dynamic_cast<const NumericError*>(&e) != nullptr ? kExitNumeric : kExitUsage;
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  std::string dataset;
  int epochs = 50;
  int layers = 2;
  std::int64_t dim = 512;
  double tau = 0.5;
  double lr1 = 1e-3;
  double wd1 = 0.0;
  double pf = 0.2;
  double pe = 0.5;
  double lr2 = 5e-3;
  double wd2 = 1e-4;
  std::int64_t m = 1024;
  std::string encoder = "gcn";
  std::string postproc = "bn";
  std::string loss = "nt_xent";
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  std::string out_dir = "run";
};

inline const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys{
      "dataset", "epochs", "layers", "dim", "tau", "lr1", "wd1", "pf", "pe", "lr2",
      "wd2", "m", "encoder", "postproc", "loss", "lambda", "seed", "out_dir"};
  return keys;
}

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  return out;
}

inline std::int64_t parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  return out;
}

inline std::string format_real(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace detail

/// Sets one key. Unknown keys and malformed values throw ConfigError.
inline void set_key(RunConfig& c, const std::string& key, const std::string& v) {
  using detail::parse_integer;
  using detail::parse_real;
  if (key == "dataset") c.dataset = v;
  else if (key == "epochs") c.epochs = static_cast<int>(parse_integer(key, v));
  else if (key == "layers") c.layers = static_cast<int>(parse_integer(key, v));
  else if (key == "dim") c.dim = parse_integer(key, v);
  else if (key == "tau") c.tau = parse_real(key, v);
  else if (key == "lr1") c.lr1 = parse_real(key, v);
  else if (key == "wd1") c.wd1 = parse_real(key, v);
  else if (key == "pf") c.pf = parse_real(key, v);
  else if (key == "pe") c.pe = parse_real(key, v);
  else if (key == "lr2") c.lr2 = parse_real(key, v);
  else if (key == "wd2") c.wd2 = parse_real(key, v);
  else if (key == "m") c.m = parse_integer(key, v);
  else if (key == "encoder") c.encoder = v;
  else if (key == "postproc") c.postproc = v;
  else if (key == "loss") c.loss = v;
  else if (key == "lambda") c.lambda = parse_real(key, v);
  else if (key == "seed") {
    const auto s = parse_integer(key, v);
    if (s < 0) throw ConfigError("config key 'seed': must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "out_dir") c.out_dir = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Applies a `key=value` override string.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_key(c, clnr::detail::trim(assignment.substr(0, eq)), clnr::detail::trim(assignment.substr(eq + 1)));
}

inline RunConfig parse_run_config(std::istream& in, const std::string& what = "config") {
  RunConfig c;
  for (const auto& [k, v] : clnr::detail::read_key_values(in, what)) set_key(c, k, v);
  return c;
}

inline RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_run_config(in, path.string());
}

/// Every key, in schema order; parses back to the same config.
inline std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  using detail::format_real;
  out << "dataset = " << c.dataset << "\n"
      << "epochs = " << c.epochs << "\n"
      << "layers = " << c.layers << "\n"
      << "dim = " << c.dim << "\n"
      << "tau = " << format_real(c.tau) << "\n"
      << "lr1 = " << format_real(c.lr1) << "\n"
      << "wd1 = " << format_real(c.wd1) << "\n"
      << "pf = " << format_real(c.pf) << "\n"
      << "pe = " << format_real(c.pe) << "\n"
      << "lr2 = " << format_real(c.lr2) << "\n"
      << "wd2 = " << format_real(c.wd2) << "\n"
      << "m = " << c.m << "\n"
      << "encoder = " << c.encoder << "\n"
      << "postproc = " << c.postproc << "\n"
      << "loss = " << c.loss << "\n"
      << "lambda = " << format_real(c.lambda) << "\n"
      << "seed = " << c.seed << "\n"
      << "out_dir = " << c.out_dir << "\n";
  return out.str();
}

/// Hidden and output widths both follow `dim`.
inline TrainConfig to_train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = c.epochs;
  t.m = c.m;
  t.tau = c.tau;
  t.lr = c.lr1;
  t.weight_decay = c.wd1;
  t.augment.feature_mask = c.pf;
  t.augment.edge_drop = c.pe;
  t.encoder.arch = parse_arch(c.encoder);
  t.encoder.n_layers = c.layers;
  t.encoder.hidden_dim = c.dim;
  t.encoder.out_dim = c.dim;
  t.kind.tag = parse_postprocessor(c.postproc);
  t.loss = parse_loss(c.loss);
  t.lambda = c.lambda;
  t.seed = c.seed;
  t.validate();
  return t;
}

inline ProbeConfig to_probe_config(const RunConfig& c) {
  ProbeConfig p;
  p.lr = c.lr2;
  p.weight_decay = c.wd2;
  p.validate();
  return p;
}

inline RunConfig validated(const RunConfig& c) {
  if (c.dataset.empty()) throw ConfigError("config key 'dataset' is required");
  (void)to_train_config(c);
  (void)to_probe_config(c);
  return c;
}

inline std::string dataset_name(const fs::path& dir) {
  const fs::path clean = dir.has_filename() ? dir : dir.parent_path();
  return clean.filename().string();
}

// ---------------------------------------------------------------------------
// Artifacts

inline constexpr const char* kCheckpointFile = "checkpoint.ckpt";
inline constexpr const char* kEmbeddingsFile = "embeddings.bin";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kConfigEchoFile = "config.txt";
inline constexpr const char* kResultsFile = "results.csv";

/// Appends one row, writing the header first if the file is new or empty.
inline void append_result(const fs::path& path, const MetricsReport& r) {
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw LoadError("cannot append to " + path.string());
  if (fresh) out << kMetricsHeader << "\n";
  out << to_csv_row(r) << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOutcome {
  TrainResult<float> result;
  double seconds = 0.0;
};

inline TrainOutcome run_training(const GraphBundle& g, const TrainConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  TrainOutcome out{train<float>(g, cfg), 0.0};
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Trains and writes checkpoint, projected full-graph embeddings, per-epoch
/// history and the config echo into `out_dir`.
inline int cmd_train(const RunConfig& raw, std::ostream& log) {
  const RunConfig c = validated(raw);
  const TrainConfig tc = to_train_config(c);
  const GraphBundle g = load_bundle(c.dataset);
  const fs::path dir = c.out_dir;
  fs::create_directories(dir);
  {
    std::ofstream echo(dir / kConfigEchoFile);
    echo << to_text(c);
  }
  log << "train: " << dataset_name(c.dataset) << " n=" << g.n_nodes
      << " edges=" << g.undirected_edges() << " method=" << method_name(tc.kind.tag)
      << " dim=" << c.dim << " epochs=" << c.epochs << " seed=" << c.seed << "\n";
  const TrainOutcome run = run_training(g, tc);
  {
    std::ofstream hist(dir / kHistoryFile);
    write_history_csv(hist, run.result.history);
  }
  if (run.result.aborted) {
    log << "train: aborted at epoch " << run.result.history.size() + 1 << ": " << run.result.abort_reason
        << "\n";
    return kExitNumeric;
  }
  save_checkpoint(dir / kCheckpointFile, run.result.params,
                  {{"dataset", dataset_name(c.dataset)},
                   {"train_seconds", detail::format_real(run.seconds)}});
  const Embeddings<float> emb = embed_full(run.result.params, g);
  write_matrix_bin(dir / kEmbeddingsFile, emb.projected);
  log << "train: final loss " << std::fixed << std::setprecision(6)
      << (run.result.history.empty() ? 0.0 : run.result.history.back().loss) << ", " << run.seconds
      << " s, artifacts in " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  /// Bundle directory with labels and splits.
  std::string dataset;
  /// Either a checkpoint or a features.bin-layout embedding file.
  std::string checkpoint;
  std::string embeddings;
  std::string results;
  std::uint64_t seed = 0;
  ProbeConfig probe;
  AugmentConfig augment;
  bool no_probe = false;
  bool no_wd2 = false;
  /// Probe on the postprocessed embeddings before sphere projection.
  bool pre_projection = false;
};

/// Evaluates a trained checkpoint or a stored embedding matrix. A stored
/// matrix has no view pair, so alignment stays empty and uniformity is taken
/// over its validation rows.
inline MetricsReport evaluate_artifact(const EvalArgs& a) {
  if (a.checkpoint.empty() == a.embeddings.empty())
    throw ConfigError("eval: give exactly one of a checkpoint or an embeddings file");
  const GraphBundle g = load_bundle(a.dataset);
  ProbeConfig probe = a.probe;
  if (a.no_wd2) probe.weight_decay = 0.0;

  if (!a.checkpoint.empty()) {
    if (!fs::exists(a.checkpoint)) throw ConfigError("eval: checkpoint not found: " + a.checkpoint);
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    if (ck.params.in_dim != g.feature_dim)
      throw ConfigError("eval: checkpoint expects " + std::to_string(ck.params.in_dim) +
                        " input features, bundle has " + std::to_string(g.feature_dim));
    EvalOptions opt;
    opt.probe = probe;
    opt.run_probe = !a.no_probe;
    opt.probe_on_projected = !a.pre_projection;
    opt.augment = a.augment;
    MetricsReport r = evaluate_model(ck.params, g, opt, a.seed);
    r.dataset = dataset_name(a.dataset);
    if (auto it = ck.meta.find("train_seconds"); it != ck.meta.end())
      r.seconds = detail::parse_real("train_seconds", it->second);
    return r;
  }

  if (!fs::exists(a.embeddings)) throw ConfigError("eval: embeddings not found: " + a.embeddings);
  if (a.pre_projection) throw ConfigError("eval: --pre-projection needs a checkpoint");
  const Tensor<double> e = read_matrix_bin(a.embeddings);
  if (e.rows() != g.n_nodes)
    throw ConfigError("eval: embeddings have " + std::to_string(e.rows()) + " rows, bundle has " +
                      std::to_string(g.n_nodes) + " nodes");
  MetricsReport r;
  r.dataset = dataset_name(a.dataset);
  r.method = "embeddings";
  r.dim = e.cols();
  r.seed = a.seed;
  if (!a.no_probe) r.accuracy = linear_probe(e, g.labels, g.splits, probe, derive_seed(a.seed, "probe")).test_accuracy;
  const Tensor<double> val = g.splits.val.size() >= 2 ? clnr::detail::take_rows(e, g.splits.val) : e;
  r.unif = uniformity(val);
  try {
    r.sc = silhouette(e, g.labels);
    r.db = davies_bouldin(e, g.labels);
    r.ch = calinski_harabasz(e, g.labels);
  } catch (const Error&) {
  }
  return r;
}

inline int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const MetricsReport r = evaluate_artifact(a);
  if (!a.results.empty()) append_result(a.results, r);
  out << to_csv_row(r) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

enum class SweepMode { kDims, kPerturb };

inline SweepMode parse_sweep_mode(const std::string& s) {
  if (s == "dims") return SweepMode::kDims;
  if (s == "perturb") return SweepMode::kPerturb;
  throw ConfigError("unknown sweep mode '" + s + "' (expected dims|perturb)");
}

struct SweepArgs {
  RunConfig base;
  SweepMode mode = SweepMode::kDims;
  std::vector<double> grid;
  /// Empty means the base config's seed only.
  std::vector<std::uint64_t> seeds;
  std::string results;
};

/// Retrains from scratch at every (grid point, seed), appending one row per
/// run. In perturb mode the dataset column carries the rate as `name@p=...`.
/// Failed points are logged and skipped; the exit code is the worst seen.
inline int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& log) {
  if (a.grid.empty()) throw ConfigError("sweep: empty grid");
  const RunConfig base = validated(a.base);
  const GraphBundle g = load_bundle(base.dataset);
  const std::string name = dataset_name(base.dataset);
  const std::vector<std::uint64_t> seeds = a.seeds.empty() ? std::vector<std::uint64_t>{base.seed} : a.seeds;
  const fs::path results = a.results.empty() ? fs::path(base.out_dir) / kResultsFile : fs::path(a.results);
  const std::int64_t base_edges = g.undirected_edges();

  int worst = kExitOk;
  for (double point : a.grid) {
    for (std::uint64_t seed : seeds) {
      try {
        RunConfig c = base;
        c.seed = seed;
        GraphBundle run_graph = g;
        std::string label = name;
        if (a.mode == SweepMode::kDims) {
          if (point != std::floor(point) || point < 1) throw ConfigError("sweep: dims must be positive integers");
          c.dim = static_cast<std::int64_t>(point);
        } else {
          run_graph.adjacency = perturb_edges(g.adjacency, point, derive_seed(seed, "perturb"));
          const auto edges = run_graph.undirected_edges();
          const auto expected = base_edges + static_cast<std::int64_t>(std::floor(static_cast<double>(base_edges) * point));
          log << "sweep: p=" << point << " seed=" << seed << " edges " << base_edges << " -> " << edges
              << " (expected " << expected << ")\n";
          std::ostringstream tag;
          tag << name << "@p=" << point;
          label = tag.str();
        }
        const TrainConfig tc = to_train_config(c);
        const TrainOutcome run = run_training(run_graph, tc);
        if (run.result.aborted) throw NumericError(run.result.abort_reason);
        EvalOptions opt;
        opt.probe = to_probe_config(c);
        opt.augment = tc.augment;
        MetricsReport r = evaluate_model(run.result.params, run_graph, opt, seed);
        r.dataset = label;
        r.seconds = run.seconds;
        append_result(results, r);
        out << to_csv_row(r) << "\n";
      } catch (const Error& e) {
        log << "sweep: point " << point << " seed " << seed << " failed: " << e.what() << "\n";
        worst = std::max(worst, exit_code_for(e));
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// plot

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line) || clnr::detail::trim(line).empty()) throw ConfigError(path.string() + ": empty csv");
  t.header = split_csv_line(clnr::detail::trim(line));
  while (std::getline(in, line)) {
    line = clnr::detail::trim(line);
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != t.header.size())
      throw ConfigError(path.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.rows.empty()) throw ConfigError(path.string() + ": no data rows");
  return t;
}

struct PlotArgs {
  std::string results;
  std::string out;
  std::string x = "align";
  std::string y = "unif";
  std::string color = "accuracy";
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Range {
  double lo, hi;
};

/// Data extent padded by 5% per side; a zero-width extent gets a unit window.
inline Range padded(double lo, double hi) {
  if (hi == lo) return {lo - 0.5, hi + 0.5};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace detail

/// Standalone SVG scatter with one glyph per row, colored blue to red along
/// the color column (grey where it is empty) and labeled by method.
inline std::string render_scatter(const CsvTable& t, const PlotArgs& a) {
  const auto xi = t.column(a.x), yi = t.column(a.y), ci = t.column(a.color);
  const std::size_t mi = std::find(t.header.begin(), t.header.end(), "method") != t.header.end()
                             ? t.column("method")
                             : t.header.size();
  struct Point {
    double x, y;
    std::optional<double> c;
    std::string label;
  };
  std::vector<Point> pts;
  for (const auto& row : t.rows) {
    if (row[xi].empty() || row[yi].empty()) continue;
    Point p{detail::parse_real(a.x, row[xi]), detail::parse_real(a.y, row[yi]), std::nullopt,
            mi < row.size() ? row[mi] : ""};
    if (!row[ci].empty()) p.c = detail::parse_real(a.color, row[ci]);
    pts.push_back(std::move(p));
  }
  if (pts.empty()) throw ConfigError("plot: no rows with both '" + a.x + "' and '" + a.y + "'");

  auto extent = [&](auto get) {
    double lo = get(pts.front()), hi = lo;
    for (const auto& p : pts) lo = std::min(lo, get(p)), hi = std::max(hi, get(p));
    return detail::padded(lo, hi);
  };
  const auto rx = extent([](const Point& p) { return p.x; });
  const auto ry = extent([](const Point& p) { return p.y; });
  double c_lo = std::numeric_limits<double>::infinity(), c_hi = -c_lo;
  for (const auto& p : pts)
    if (p.c) c_lo = std::min(c_lo, *p.c), c_hi = std::max(c_hi, *p.c);

  constexpr double kW = 640, kH = 480, kL = 70, kR = 30, kT = 30, kB = 60;
  auto sx = [&](double v) { return kL + (v - rx.lo) / (rx.hi - rx.lo) * (kW - kL - kR); };
  auto sy = [&](double v) { return kH - kB - (v - ry.lo) / (ry.hi - ry.lo) * (kH - kT - kB); };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<g class=\"axes\" stroke=\"black\">\n"
      << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\"" << kH - kB << "\"/>\n"
      << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB << "\"/>\n"
      << "</g>\n";
  svg << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int k = 0; k <= 4; ++k) {
    const double vx = rx.lo + (rx.hi - rx.lo) * k / 4.0;
    const double vy = ry.lo + (ry.hi - ry.lo) * k / 4.0;
    svg << "<text x=\"" << sx(vx) << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">"
        << std::setprecision(3) << vx << std::setprecision(2) << "</text>\n";
    svg << "<text x=\"" << kL - 6 << "\" y=\"" << sy(vy) + 4 << "\" text-anchor=\"end\">" << std::setprecision(3)
        << vy << std::setprecision(2) << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<text class=\"xlabel\" x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" << detail::xml_escape(a.x)
      << "</text>\n";
  svg << "<text class=\"ylabel\" x=\"18\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 18 " << (kT + kH - kB) / 2 << ")\">"
      << detail::xml_escape(a.y) << "</text>\n";
  svg << "<g class=\"glyphs\">\n";
  for (const auto& p : pts) {
    std::string fill = "#888888";
    if (p.c) {
      const double s = c_hi > c_lo ? (*p.c - c_lo) / (c_hi - c_lo) : 1.0;
      std::ostringstream col;
      col << "rgb(" << static_cast<int>(std::lround(255 * s)) << ",0," << static_cast<int>(std::lround(255 * (1 - s)))
          << ")";
      fill = col.str();
    }
    svg << "<circle class=\"glyph\" cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y) << "\" r=\"6\" fill=\"" << fill
        << "\"><title>" << detail::xml_escape(p.label) << "</title></circle>\n";
    if (!p.label.empty())
      svg << "<text x=\"" << sx(p.x) + 8 << "\" y=\"" << sy(p.y) - 8
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(p.label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

inline int cmd_plot(const PlotArgs& a, std::ostream& log) {
  const CsvTable t = read_csv(a.results);
  const std::string svg = render_scatter(t, a);
  std::ofstream out(a.out);
  if (!out) throw ConfigError("cannot write " + a.out);
  out << svg;
  log << "plot: wrote " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gen-sbm, validate

inline int cmd_gen_sbm(const SbmConfig& cfg, const std::string& out_dir, bool binary, std::ostream& log) {
  const GraphBundle g = generate_sbm(cfg);
  save_bundle(g, out_dir, binary);
  log << "gen-sbm: " << g.n_nodes << " nodes, " << g.undirected_edges() << " edges, " << g.n_classes
      << " classes -> " << out_dir << "\n";
  return kExitOk;
}

inline int cmd_validate(const std::string& dir, std::ostream& out) {
  const GraphBundle g = load_bundle(dir);
  out << "ok: " << g.n_nodes << " nodes, " << g.undirected_edges() << " edges, " << g.feature_dim
      << " features, " << g.n_classes << " classes, split " << g.splits.train.size() << "/"
      << g.splits.val.size() << "/" << g.splits.test.size() << "\n";
  return kExitOk;
}

}  // namespace clnr::cli
