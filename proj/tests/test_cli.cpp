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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "clnr/cli.hpp"
#include "test_util.hpp"

namespace clnr {
namespace {

namespace fs = std::filesystem;
using testing::read_text;
using testing::TempDir;
using testing::write_text;

// Runs the CLI binary with `args`, sending stdout and stderr to `log`.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CLNR_CLI_PATH) + " " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

TEST(RunConfigTest, ParsesOverridesAndRoundTrips) {
  std::istringstream in("# comment\ndataset = data/x\nepochs = 7\ntau = 0.25\npostproc = dbn\n");
  cli::RunConfig c = cli::parse_run_config(in);
  EXPECT_EQ(c.dataset, "data/x");
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.tau, 0.25);
  EXPECT_EQ(c.postproc, "dbn");
  EXPECT_EQ(c.dim, 512);
  cli::apply_override(c, "lr1=0.1");
  EXPECT_EQ(c.lr1, 0.1);
  std::istringstream back(cli::to_text(c));
  EXPECT_EQ(cli::to_text(cli::parse_run_config(back)), cli::to_text(c));
}

TEST(RunConfigTest, RejectsBadInput) {
  cli::RunConfig c;
  EXPECT_THROW(cli::apply_override(c, "temperature=1"), ConfigError);
  EXPECT_THROW(cli::apply_override(c, "epochs"), ConfigError);
  EXPECT_THROW(cli::apply_override(c, "epochs=ten"), ConfigError);
  EXPECT_THROW(cli::apply_override(c, "seed=-1"), ConfigError);
  EXPECT_THROW(cli::validated(c), ConfigError);  // no dataset
  c.dataset = "d";
  c.postproc = "whiten";
  EXPECT_THROW(cli::to_train_config(c), ConfigError);
}

TEST(RunConfigTest, TrainConfigMapping) {
  cli::RunConfig c;
  c.dataset = "d";
  c.dim = 64;
  c.pf = 0.1;
  c.postproc = "mlp_bn";
  const auto t = cli::to_train_config(c);
  EXPECT_EQ(t.encoder.hidden_dim, 64);
  EXPECT_EQ(t.encoder.out_dim, 64);
  EXPECT_EQ(t.augment.feature_mask, 0.1);
  EXPECT_EQ(t.kind.tag, Postprocessor::kMlpBn);
}

TEST(ExitCodeTest, Mapping) {
  EXPECT_EQ(cli::exit_code_for(NumericError("x")), cli::kExitNumeric);
  EXPECT_EQ(cli::exit_code_for(ConfigError("x")), cli::kExitUsage);
  EXPECT_EQ(cli::exit_code_for(ShapeError("x")), cli::kExitUsage);
}

TEST(CsvTest, SplitAndRead) {
  EXPECT_EQ(cli::split_csv_line("a,,b"), (std::vector<std::string>{"a", "", "b"}));
  TempDir d;
  write_text(d / "empty.csv", "");
  EXPECT_THROW(cli::read_csv(d / "empty.csv"), ConfigError);
  write_text(d / "header.csv", std::string(kMetricsHeader) + "\n");
  EXPECT_THROW(cli::read_csv(d / "header.csv"), ConfigError);
}

// End-to-end through the binary on a small generated bundle.
class CliEndToEnd : public ::testing::Test {
 protected:
  void SetUp() override {
    data_ = dir_ / "sbm";
    ASSERT_EQ(run_cli("gen-sbm --out '" + data_.string() +
                          "' --blocks 40,40,40 --p-in 0.15 --p-out 0.01 --feature-dim 12 --seed 3",
                      dir_ / "gen.log"),
              0)
        << read_text(dir_ / "gen.log");
  }

  fs::path write_config(const std::string& name, const std::string& extra = "") {
    const fs::path p = dir_ / (name + ".txt");
    write_text(p, "dataset = " + data_.string() + "\nepochs = 3\ndim = 16\nm = 64\nout_dir = " +
                      (dir_ / name).string() + "\n" + extra);
    return p;
  }

  TempDir dir_;
  fs::path data_;
};

TEST_F(CliEndToEnd, ValidateReportsTheBundle) {
  EXPECT_EQ(run_cli("validate '" + data_.string() + "'", dir_ / "v.log"), 0);
  EXPECT_NE(read_text(dir_ / "v.log").find("120"), std::string::npos);
  EXPECT_EQ(run_cli("validate '" + (dir_ / "missing").string() + "'", dir_ / "v2.log"), 2);
}

TEST_F(CliEndToEnd, TrainWritesReproducibleArtifacts) {
  const auto cfg = write_config("a");
  ASSERT_EQ(run_cli("train --config '" + cfg.string() + "'", dir_ / "t.log"), 0) << read_text(dir_ / "t.log");
  for (const char* f : {cli::kCheckpointFile, cli::kEmbeddingsFile, cli::kHistoryFile, cli::kConfigEchoFile})
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  EXPECT_EQ(count_lines(read_text(dir_ / "a" / cli::kHistoryFile)), 4u);
  const std::string first = read_text(dir_ / "a" / cli::kEmbeddingsFile);

  ASSERT_EQ(run_cli("train --config '" + cfg.string() + "'", dir_ / "t2.log"), 0);
  EXPECT_EQ(read_text(dir_ / "a" / cli::kEmbeddingsFile), first);

  ASSERT_EQ(run_cli("train --config '" + cfg.string() + "' --set epochs=2 --set out_dir=" + (dir_ / "b").string(),
                    dir_ / "t3.log"),
            0);
  EXPECT_EQ(count_lines(read_text(dir_ / "b" / cli::kHistoryFile)), 3u);
}

TEST_F(CliEndToEnd, TrainRejectsBadConfig) {
  EXPECT_EQ(run_cli("train --config '" + write_config("bad", "temperature = 2\n").string() + "'", dir_ / "b.log"), 2);
  EXPECT_EQ(run_cli("train --config '" + write_config("bad2").string() + "' --set layers=9", dir_ / "b2.log"), 2);
  EXPECT_EQ(run_cli("train", dir_ / "b3.log"), 2);
}

TEST_F(CliEndToEnd, EvalAppendsRows) {
  const auto cfg = write_config("e");
  ASSERT_EQ(run_cli("train --config '" + cfg.string() + "'", dir_ / "t.log"), 0);
  const fs::path results = dir_ / "e" / cli::kResultsFile;
  ASSERT_EQ(run_cli("eval --config '" + cfg.string() + "'", dir_ / "e1.log"), 0) << read_text(dir_ / "e1.log");
  ASSERT_EQ(run_cli("eval --config '" + cfg.string() + "'", dir_ / "e2.log"), 0);
  ASSERT_EQ(run_cli("eval --config '" + cfg.string() + "' --no-probe", dir_ / "e3.log"), 0);

  const auto table = cli::read_csv(results);
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.header, cli::split_csv_line(kMetricsHeader));
  EXPECT_EQ(table.rows[0], table.rows[1]);
  EXPECT_EQ(table.rows[0][0], "sbm");
  EXPECT_EQ(table.rows[0][1], "CLNR");
  EXPECT_FALSE(table.rows[0][4].empty());
  EXPECT_TRUE(table.rows[2][4].empty());
  EXPECT_FALSE(table.rows[2][6].empty());

  const fs::path emb_results = dir_ / "emb.csv";
  ASSERT_EQ(run_cli("eval --dataset '" + data_.string() + "' --embeddings '" +
                        (dir_ / "e" / cli::kEmbeddingsFile).string() + "' --results '" + emb_results.string() + "'",
                    dir_ / "e4.log"),
            0)
      << read_text(dir_ / "e4.log");
  const auto emb = cli::read_csv(emb_results);
  ASSERT_EQ(emb.rows.size(), 1u);
  EXPECT_EQ(emb.rows[0][1], "embeddings");
  EXPECT_TRUE(emb.rows[0][5].empty());
}

TEST_F(CliEndToEnd, EvalRejectsMissingArtifacts) {
  EXPECT_EQ(run_cli("eval --dataset '" + data_.string() + "' --checkpoint '" + (dir_ / "none.ckpt").string() +
                        "' --results '" + (dir_ / "r.csv").string() + "'",
                    dir_ / "m.log"),
            2);
  EXPECT_EQ(run_cli("eval --dataset '" + data_.string() + "' --results '" + (dir_ / "r.csv").string() + "'",
                    dir_ / "m2.log"),
            2);
  EXPECT_FALSE(fs::exists(dir_ / "r.csv"));
}

TEST_F(CliEndToEnd, SweepDimsAndPerturb) {
  const auto cfg = write_config("s", "epochs = 2\n");
  const fs::path dims = dir_ / "dims.csv";
  ASSERT_EQ(run_cli("sweep --config '" + cfg.string() + "' --mode dims --grid 4,8 --seeds 0,1 --results '" +
                        dims.string() + "'",
                    dir_ / "d.log"),
            0)
      << read_text(dir_ / "d.log");
  const auto d = cli::read_csv(dims);
  ASSERT_EQ(d.rows.size(), 4u);
  EXPECT_EQ(d.rows[0][2], "4");
  EXPECT_EQ(d.rows[3][2], "8");

  const fs::path pert = dir_ / "pert.csv";
  ASSERT_EQ(run_cli("sweep --config '" + cfg.string() + "' --mode perturb --grid 0,0.5 --results '" +
                        pert.string() + "'",
                    dir_ / "p.log"),
            0)
      << read_text(dir_ / "p.log");
  const std::string log = read_text(dir_ / "p.log");
  EXPECT_EQ(count_of(log, "sweep: p="), 2u);
  const auto p = cli::read_csv(pert);
  ASSERT_EQ(p.rows.size(), 2u);
  EXPECT_EQ(p.rows[1][0], "sbm@p=0.5");
  EXPECT_EQ(run_cli("sweep --config '" + cfg.string() + "' --mode widths --grid 1", dir_ / "x.log"), 2);
}

TEST_F(CliEndToEnd, PlotDrawsOneGlyphPerRow) {
  std::string csv = std::string(kMetricsHeader) + "\n";
  for (int i = 0; i < 5; ++i)
    csv += "sbm,M" + std::to_string(i) + ",16,0,0." + std::to_string(5 + i) + ",0." + std::to_string(i + 1) +
           ",-" + std::to_string(i + 1) + ",,,,1.0\n";
  write_text(dir_ / "r.csv", csv);
  ASSERT_EQ(run_cli("plot --results '" + (dir_ / "r.csv").string() + "' --out '" + (dir_ / "p.svg").string() + "'",
                    dir_ / "pl.log"),
            0)
      << read_text(dir_ / "pl.log");
  const std::string svg = read_text(dir_ / "p.svg");
  EXPECT_EQ(count_of(svg, "class=\"glyph\""), 5u);
  EXPECT_NE(svg.find("M3"), std::string::npos);

  write_text(dir_ / "empty.csv", "");
  EXPECT_EQ(run_cli("plot --results '" + (dir_ / "empty.csv").string() + "' --out '" + (dir_ / "q.svg").string() +
                        "'",
                    dir_ / "pl2.log"),
            2);
}

}  // namespace
}  // namespace clnr
