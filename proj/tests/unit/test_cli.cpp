#include "cli/commands.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace viscmod;
using namespace viscmod::cli;

namespace {
fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("viscmod_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

Context quiet_context(const fs::path& out, RunConfig cfg = {}) {
  Context ctx;
  ctx.cfg = std::move(cfg);
  ctx.out = out;
  ctx.input = out;
  ctx.quiet = true;
  return ctx;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}
}  // namespace

TEST(Config, ParsesSectionsAndDefaults) {
  auto c = parse_config_text("[grid]\nN = 32\ndomain = truncated\n[oned]\npairing = example1\n"
                             "[structure]\nlemma_eps = 0, 0.25\n");
  EXPECT_EQ(c.grid.N, 32);
  EXPECT_EQ(c.grid.domain, "truncated");
  EXPECT_EQ(c.oned.pairing, "example1");
  EXPECT_EQ(c.structure.lemma_eps, (std::vector<double>{0.0, 0.25}));
  EXPECT_EQ(c.problem.kind, "linear_drift");
  EXPECT_DOUBLE_EQ(c.solver.tol, 1e-8);
}

TEST(Config, RejectsUnknownOrMalformed) {
  EXPECT_THROW(parse_config_text("[grid]\nM = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_text("N = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[grid]\nN = three\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[problem]\nkind = cubic\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[solver]\ninit = noise\n"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(VISCMOD_SOURCE_DIR) / "configs")) {
    std::ifstream is(entry.path());
    RunConfig c;
    EXPECT_NO_THROW(c = parse_config(is)) << entry.path();
    EXPECT_NO_THROW(configured_pairing(c)) << entry.path();
  }
}

TEST(Config, PairingMustMatchOperator) {
  RunConfig c;
  EXPECT_THROW(configured_pairing(c), MissingKey);
  c.oned.pairing = "example2_laplace";
  EXPECT_THROW(configured_pairing(c), ConfigError);
  c.oned.pairing = "example1";
  EXPECT_EQ(configured_pairing(c).id, "example1");
}

TEST(Cli, MissingPairingExitsTwoAndNamesKey) {
  const auto out = scratch("missing");
  EXPECT_EQ(run_subcommand("pipeline", quiet_context(out)), kConfigFailure);
  const Json err = Json::parse(slurp(out / "error.json"));
  EXPECT_EQ(err["key"], "oned.pairing");
}

TEST(Cli, MissingInputArtifactExitsTwo) {
  const auto out = scratch("noinput");
  RunConfig c;
  c.oned.pairing = "example1";
  EXPECT_EQ(run_subcommand("compare", quiet_context(out, c)), kConfigFailure);
}

TEST(Cli, NonFiniteForcingExitsThree) {
  const auto out = scratch("diverge");
  RunConfig c;
  c.problem.forcing = "sqrt(0-1)";
  EXPECT_EQ(run_subcommand("solve", quiet_context(out, c)), kDivergence);
  EXPECT_EQ(Json::parse(slurp(out / "error.json"))["iteration"], 0);
}

TEST(Cli, UnconvergedSolveExitsOne) {
  const auto out = scratch("unconverged");
  RunConfig c;
  c.solver.max_iter = 3;
  EXPECT_EQ(run_subcommand("solve", quiet_context(out, c)), kVerificationFailure);
  EXPECT_TRUE(fs::exists(out / "solve.json"));
}

TEST(Cli, PipelineWritesArtifacts) {
  const auto out = scratch("pipeline");
  RunConfig c;
  c.oned.pairing = "example1";
  c.grid.N = 32;
  EXPECT_EQ(run_subcommand("pipeline", quiet_context(out, c)), kOk);
  for (const char* f : {"field.csv", "residuals.csv", "solve.json", "modulus.csv", "modulus.json", "zeta.csv",
                        "supersolution.json", "compare.json", "bounds.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const Json b = Json::parse(slurp(out / "bounds.json"));
  EXPECT_EQ(b["schema_version"], kSchemaVersion);
}

TEST(Cli, CheckStructureIsByteIdenticalAcrossRunsAndThreads) {
  RunConfig c;
  c.oned.pairing = "example1";
  c.structure.samples = 400;
  c.problem.c = 1.0;
  const auto a = scratch("struct_a"), b = scratch("struct_b");
  Context ca = quiet_context(a, c), cb = quiet_context(b, c);
  ca.par.threads = 1;
  cb.par.threads = 8;
  EXPECT_EQ(run_subcommand("check-structure", ca), kOk);
  EXPECT_EQ(run_subcommand("check-structure", cb), kOk);
  EXPECT_EQ(slurp(a / "structure.json"), slurp(b / "structure.json"));
}
