#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgx/error.hpp"
#include "kgx/pipeline.hpp"

using namespace kgx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small graph: nationality follows birth city's country.
void write_dataset(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream train(dir / "train.tsv"), valid(dir / "valid.tsv"), test(dir / "test.tsv");
  const char* countries[] = {"fr", "es", "it"};
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 2; ++k) train << "city" << c << k << "\tcityIn\t" << countries[c] << '\n';
  for (int i = 0; i < 60; ++i) {
    const int c = (i * 7) % 3;
    train << "p" << i << "\tbornIn\tcity" << c << (i % 2) << '\n';
    auto& out = i % 4 == 0 ? test : (i % 9 == 1 ? valid : train);
    out << "p" << i << "\tnationality\t" << countries[c] << '\n';
  }
}

class PipelineRun : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("kgx_pipeline_" + std::to_string(::getpid()) + "_" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    write_dataset(root_ / "data");
    cfg_ = PipelineConfig::defaults();
    cfg_.train_path = root_ / "data" / "train.tsv";
    cfg_.valid_path = root_ / "data" / "valid.tsv";
    cfg_.test_path = root_ / "data" / "test.tsv";
    cfg_.dim = 8;
    cfg_.training.epochs = 40;
    cfg_.out_dir = root_ / "out";
  }
  void TearDown() override { fs::remove_all(root_); }

  void all(const PipelineConfig& cfg) {
    std::ostringstream log;
    for (auto c : {Command::kIngest, Command::kTrain, Command::kMine, Command::kExplain, Command::kEvaluate,
                   Command::kReport})
      run(c, cfg, log);
  }

  fs::path root_;
  PipelineConfig cfg_;
};

}  // namespace

TEST(Config, RenderParseRoundTrip) {
  auto cfg = PipelineConfig::defaults();
  cfg.set("model.kind", "hole");
  cfg.set("explain.predicates", "a, b");
  cfg.set("mining.min_precision", "0.25");
  std::istringstream in(cfg.render());
  const auto back = PipelineConfig::parse(in);
  EXPECT_EQ(back.render(), cfg.render());
  EXPECT_EQ(back.model_kind, ModelKind::kHolE);
  EXPECT_EQ(back.predicates, (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(back.scoping.explain.miner.min_precision, 0.25);
}

TEST(Config, EveryProblemIsListed) {
  std::istringstream in("[model]\nkind = rnn\ndim = x\nseed = 1\n[explain]\nseed = 1\nbogus = 2\n[mining]\nmode = free\n");
  try {
    PipelineConfig::parse(in);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 4u) << e.what();
  }
}

TEST(Config, SemanticProblemsAndSeeds) {
  std::istringstream in("[model]\ndim = 0\nnorm = 3\n[explain]\nk_min = 5\nk_max = 3\ntest_fraction = 1.5\n");
  auto cfg = PipelineConfig::parse(in);
  const auto problems = cfg.problems();
  // Missing seeds, dim, norm, k range, test fraction; TrainConfig/MinerConfig stay valid.
  EXPECT_EQ(problems.size(), 6u);
  cfg.set_seed(3);
  EXPECT_EQ(cfg.problems().size(), 4u);
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_TRUE(PipelineConfig::defaults().problems().empty());
}

TEST(Config, RelativePathsFollowTheFile) {
  std::istringstream in("[data]\ntrain = d/train.tsv\n[output]\ndir = /abs/out\n");
  const auto cfg = PipelineConfig::parse(in, "/etc/conf");
  EXPECT_EQ(cfg.train_path, fs::path("/etc/conf/d/train.tsv"));
  EXPECT_EQ(cfg.out_dir, fs::path("/abs/out"));
}

TEST_F(PipelineRun, MissingUpstreamNamesTheCommand) {
  std::ostringstream log;
  try {
    run(Command::kTrain, cfg_, log);
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "ingest");
  }
  run(Command::kIngest, cfg_, log);
  try {
    run(Command::kMine, cfg_, log);
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "train");
  }
  run(Command::kTrain, cfg_, log);
  try {
    run(Command::kExplain, cfg_, log);
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "mine");
  }
  try {
    run(Command::kReport, cfg_, log);
    FAIL();
  } catch (const MissingArtifactError& e) {
    EXPECT_EQ(e.producer(), "evaluate");
  }
}

TEST_F(PipelineRun, ReportsAreByteIdenticalAcrossRuns) {
  all(cfg_);
  const ArtifactPaths a{cfg_.out_dir};
  const auto first_csv = slurp(a.report_dir() / "fidelity.csv");
  const auto first_json = slurp(a.report_dir() / "fidelity.json");
  const auto first_cov = slurp(a.report_dir() / "coverage.json");
  const auto first_top = slurp(a.report_dir() / "top_rules.tsv");
  EXPECT_NE(first_csv.find("transe,global,unbounded"), std::string::npos);

  auto again = cfg_;
  again.out_dir = root_ / "out2";
  again.threads = 3;
  all(again);
  const ArtifactPaths b{again.out_dir};
  EXPECT_EQ(slurp(b.report_dir() / "fidelity.csv"), first_csv);
  EXPECT_EQ(slurp(b.report_dir() / "fidelity.json"), first_json);
  EXPECT_EQ(slurp(b.report_dir() / "coverage.json"), first_cov);
  EXPECT_EQ(slurp(b.report_dir() / "top_rules.tsv"), first_top);
}

TEST_F(PipelineRun, ScopesWriteDistinctReloadableArtifacts) {
  all(cfg_);
  auto local = cfg_;
  local.scope = ScopeKind::kLocal;
  std::ostringstream log;
  run(Command::kExplain, local, log);
  run(Command::kEvaluate, local, log);
  const ArtifactPaths paths{cfg_.out_dir};
  const auto ds = load_ingested(paths);
  for (auto scope : {ScopeKind::kGlobal, ScopeKind::kLocal}) {
    const auto dir = paths.explanations_dir(scope, RuleMode::kUnbounded);
    ASSERT_TRUE(fs::is_directory(dir));
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.path().extension() == ".json" && e.path().filename() != "summary.json") {
        std::ifstream in(e.path());
        const auto expl = read_explanation(in, *ds.vocab);
        EXPECT_EQ(expl.scope.kind, scope);
        ++files;
      }
    EXPECT_GE(files, 1u);
    EXPECT_TRUE(fs::exists(paths.evaluation_file(scope, RuleMode::kUnbounded)));
  }
}

TEST_F(PipelineRun, UnknownPredicateIsDataError) {
  std::ostringstream log;
  run(Command::kIngest, cfg_, log);
  run(Command::kTrain, cfg_, log);
  auto cfg = cfg_;
  cfg.predicates = {"nope"};
  EXPECT_THROW(run(Command::kMine, cfg, log), DataError);
  cfg.predicates = {"cityIn"};  // no test facts
  EXPECT_THROW(run(Command::kMine, cfg, log), DataError);
}

TEST(ContextCsv, RoundTripWithQuoting) {
  Vocabulary v;
  v.entities.intern("a,1");
  v.entities.intern("b\"x");
  v.predicates.intern("p");
  Context c;
  c.facts = {{{0, 0, 1}, true, 0}, {{1, 0, 0}, false, 0}};
  std::stringstream s;
  write_context_csv(s, v, {{&c, "0000:train"}});
  const auto back = read_context_csv(s, v, "0000:train");
  ASSERT_EQ(back.facts.size(), 2u);
  EXPECT_EQ(back.facts[0].fact, c.facts[0].fact);
  EXPECT_TRUE(back.facts[0].truth);
  EXPECT_FALSE(back.facts[1].truth);
}
