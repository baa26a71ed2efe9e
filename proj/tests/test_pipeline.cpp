// Copyright 2026 The courtlens Authors.
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

#include "courtlens/fixtures.hpp"
#include "courtlens/json_io.hpp"
#include "courtlens/pipeline.hpp"
#include "courtlens/svg.hpp"

#include "test_support.hpp"

#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace courtlens {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

json bundled_config(const std::string& name) { return read_json(testing::data_dir() / (name + ".cfg")); }

PipelineConfig config_in(json doc, const fs::path& out) {
  doc["out_dir"] = out.string();
  return parse_config(doc, testing::data_dir());
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

int count(const std::string& haystack, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

// ----- Fixtures --------------------------------------------------------------

TEST(Fixture, RolesClassesNearlyBalanced) {
  const Fixture f = make_fixture("roles", 500, 3);
  std::map<std::string, int> counts;
  for (const auto& label : f.table.labels("ROLE")) ++counts[label];
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [role, n] : counts) EXPECT_NEAR(n, 100, 10) << role;
  EXPECT_EQ(f.table.numeric_names().size(), 46u);
  EXPECT_TRUE(f.truth.contains("role_switchers"));
}

TEST(Fixture, SchemasMatchTheDatasets) {
  EXPECT_EQ(make_fixture("four_factors", 60, 1).table.names(),
            (std::vector<std::string>{"EFG_O", "EFG_D", "TOR", "TORD", "ORB", "DRB", "FTR", "FTRD", "W"}));
  EXPECT_EQ(make_fixture("salary", 60, 1).table.names(),
            (std::vector<std::string>{"PV", "TFC", "TRC", "MPG", "PTS", "DRPM", "ORPM", "PN", "AGE", "SM"}));
}

TEST(Fixture, BundledFilesRegenerateByteForByte) {
  const fs::path dir = testing::scratch_dir("fixture_regen");
  for (const std::string& kind : fixture_kinds()) {
    const fs::path bundled = testing::data_dir() / (kind + ".csv");
    const json truth = read_json(sidecar_path(bundled));
    const fs::path out = dir / (kind + ".csv");
    write_fixture(make_fixture(kind, truth.at("n").get<Index>(), truth.at("seed").get<std::uint64_t>()), out);
    EXPECT_EQ(slurp(out), slurp(bundled)) << kind;
    EXPECT_EQ(slurp(sidecar_path(out)), slurp(sidecar_path(bundled))) << kind;
  }
}

TEST(Fixture, BundledFourFactorsHasTwoHundredRows) {
  EXPECT_EQ(load_csv(testing::data_dir() / "four_factors.csv").n_rows(), 200);
}

TEST(Fixture, RejectsUnknownKindAndSmallN) {
  EXPECT_THROW_CODE(make_fixture("hockey", 100, 1), usage);
  EXPECT_THROW_CODE(make_fixture("salary", 49, 1), usage);
}

TEST(Fixture, FourFactorsCalibrationRun) {
  const fs::path dir = testing::scratch_dir("ff500");
  write_fixture(make_fixture("four_factors", 500, 1), dir / "ff.csv");
  json doc = bundled_config("four_factors");
  doc["input"] = (dir / "ff.csv").string();
  doc["explain"] = json::array();
  doc["plots"] = json::array();
  run(config_in(doc, dir / "out"));
  const double r2 = read_json(dir / "out" / "report.json").at("metrics").at("test_r2");
  EXPECT_GE(r2, 0.75);
  EXPECT_LE(r2, 0.87);
}

TEST(Fixture, SalaryNeedsQuadraticTerms) {
  const fs::path dir = testing::scratch_dir("salary800");
  write_fixture(make_fixture("salary", 800, 1), dir / "salary.csv");
  json doc = bundled_config("salary");
  doc["input"] = (dir / "salary.csv").string();
  doc["explain"] = json::array();
  doc["plots"] = json::array();
  run(config_in(doc, dir / "out"));
  const json cmp = read_json(dir / "out" / "report.json").at("fit").at("poly_compare");
  ASSERT_EQ(cmp.size(), 2u);
  EXPECT_GE(cmp[1].at("test_r2").get<double>() - cmp[0].at("test_r2").get<double>(), 0.10);
}

// ----- SVG -------------------------------------------------------------------

TEST(Svg, WeightPlotStructure) {
  const json doc = {{"feature_names", {"alpha", "beta", "gamma"}},
                    {"values", {0.5, -0.2, 0.1}},
                    {"lower", {0.4, -0.3, -0.1}},
                    {"upper", {0.6, -0.1, 0.3}}};
  const std::string svg = render_svg("weight_plot", doc);
  EXPECT_EQ(count(svg, "<line class=\"whisker\""), 3);
  std::vector<std::string> labels;
  const std::regex label_re("<text class=\"ylabel\"[^>]*>([^<]*)</text>");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), label_re); it != std::sregex_iterator(); ++it)
    labels.push_back((*it)[1]);
  EXPECT_EQ(labels, (std::vector<std::string>{"alpha", "beta", "gamma"}));
  EXPECT_EQ(svg, render_svg("weight_plot", doc));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Svg, ScreeFirstBarTallest) {
  const std::string svg = render_svg("scree", {{"values", {0.8, 0.05, 0.1, 0.05}}});
  std::vector<double> heights;
  const std::regex bar_re("<rect class=\"bar\"[^>]* height=\"([0-9.]+)\"");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), bar_re); it != std::sregex_iterator(); ++it)
    heights.push_back(std::stod((*it)[1]));
  ASSERT_EQ(heights.size(), 4u);
  EXPECT_EQ(*std::max_element(heights.begin(), heights.end()), heights[0]);
  EXPECT_GT(heights[0], heights[2]);
}

TEST(Svg, EveryKindRendersAxes) {
  const std::map<std::string, json> docs{
      {"pdp", {{"grid", {0, 1, 2}}, {"values", {1, 3, 2}}, {"xlabel", "x"}}},
      {"box_by_group", {{"groups", {"a", "b"}}, {"values", {{1, 2, 3, 4}, {2, 5, 6}}}}},
      {"scatter", {{"x", {0, 1, 2}}, {"y", {2, 1, 0}}, {"labels", {"p", "q", "p"}}}},
  };
  for (const auto& [kind, doc] : docs) {
    const std::string svg = render_svg(kind, doc);
    EXPECT_NE(svg.find("class=\"axis\""), std::string::npos) << kind;
  }
}

TEST(Svg, SchemaViolationsNameTheProblem) {
  try {
    render_svg("scree", {{"values", json::array()}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::render);
    EXPECT_NE(e.detail().find("empty"), std::string::npos) << e.detail();
  }
  try {
    render_svg("pdp", {{"grid", {1, 2}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::render);
    EXPECT_NE(e.detail().find("missing key 'values'"), std::string::npos) << e.detail();
  }
  EXPECT_THROW_CODE(render_svg("weight_plot", {{"feature_names", {"a"}}, {"values", {1, 2}}, {"lower", {0}}, {"upper", {2}}}), render);
  EXPECT_THROW_CODE(render_svg("pie", {{"values", {1}}}), usage);
}

// ----- Config ----------------------------------------------------------------

TEST(Config, RejectsUnknownAndNestedKeys) {
  json doc = bundled_config("four_factors");
  doc["colour"] = "red";
  EXPECT_THROW_CODE(parse_config(doc, testing::data_dir()), config);
  doc.erase("colour");
  doc["model"] = json{{"kind", "ols"}};
  EXPECT_THROW_CODE(parse_config(doc, testing::data_dir()), config);
}

TEST(Config, TargetMustNotBeAFeature) {
  json doc = bundled_config("four_factors");
  doc["features"].push_back("W");
  EXPECT_THROW_CODE(parse_config(doc, testing::data_dir()), config);
}

TEST(Config, RelativeInputResolvesAgainstConfigDirectory) {
  const PipelineConfig cfg = load_config(testing::data_dir() / "salary.cfg");
  EXPECT_EQ(cfg.input, testing::data_dir() / "salary.csv");
  EXPECT_EQ(cfg.seed, 1u);
}

TEST(Config, OverridesAreRecorded) {
  PipelineConfig cfg = load_config(testing::data_dir() / "four_factors.cfg");
  apply_overrides(cfg, 9, fs::path("/tmp/elsewhere"));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.raw.at("seed"), 9);
  EXPECT_EQ(cfg.out_dir, fs::path("/tmp/elsewhere"));
}

TEST(Config, MissingColumnFailsInIngest) {
  const fs::path dir = testing::scratch_dir("missing_column");
  json doc = bundled_config("four_factors");
  doc["target"] = "WINS";
  try {
    run(config_in(doc, dir));
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "ingest");
    EXPECT_EQ(e.kind(), ErrorKind::data);
  }
  EXPECT_FALSE(fs::exists(dir / "report.json"));
}

// ----- Pipeline ----------------------------------------------------------------

TEST(Pipeline, FourFactorsSmokeContract) {
  const fs::path dir = testing::scratch_dir("ff_smoke");
  run(config_in(bundled_config("four_factors"), dir));
  const json report = read_json(dir / "report.json");
  EXPECT_EQ(report.at("model"), "ols");
  EXPECT_TRUE(report.at("metrics").contains("r2"));
  EXPECT_TRUE(fs::exists(dir / "weight_plot.svg"));
  EXPECT_EQ(report.at("seed"), 1);
  EXPECT_EQ(report.at("version"), tool_version());
  json echo = bundled_config("four_factors");
  echo.erase("out_dir");
  EXPECT_EQ(report.at("config"), echo);
}

TEST(Pipeline, StagesOneByOneEqualRun) {
  for (const std::string name : {"four_factors", "roles"}) {
    const fs::path all = testing::scratch_dir(name + "_all"), staged = testing::scratch_dir(name + "_staged");
    run(config_in(bundled_config(name), all));
    const PipelineConfig cfg = config_in(bundled_config(name), staged);
    for (const auto& stage : stage_names()) run_stage(stage, cfg);
    EXPECT_EQ(directory_bytes(all), directory_bytes(staged)) << name;
  }
}

TEST(Pipeline, StageNeedsPredecessorOutput) {
  const fs::path dir = testing::scratch_dir("orphan_stage");
  EXPECT_THROW(run_stage("fit", config_in(bundled_config("four_factors"), dir)), StageError);
}

TEST(Pipeline, SevenModelFamilies) {
  std::map<std::string, double> r2;
  for (const std::string model : {"ols", "ridge", "lasso", "huber", "tweedie", "tree", "mlp"}) {
    const fs::path dir = testing::scratch_dir("family_" + model);
    json doc = bundled_config("four_factors");
    doc["model"] = model;
    doc["explain"] = {"permutation", "pdp"};
    doc["plots"] = {"pdp"};
    run(config_in(doc, dir));
    const json report = read_json(dir / "report.json");
    EXPECT_EQ(report.at("model"), model);
    r2[model] = report.at("metrics").at("r2");
    EXPECT_TRUE(std::isfinite(r2[model])) << model;
  }
  EXPECT_NEAR(r2["ols"], r2["huber"], 0.05);
}

TEST(Pipeline, SeedChangesSplitButNotShape) {
  const fs::path a = testing::scratch_dir("seed_a"), b = testing::scratch_dir("seed_b");
  PipelineConfig ca = config_in(bundled_config("four_factors"), a);
  PipelineConfig cb = config_in(bundled_config("four_factors"), b);
  apply_overrides(cb, 2, std::nullopt);
  run(ca);
  run(cb);
  EXPECT_NE(slurp(a / "test.csv"), slurp(b / "test.csv"));
  EXPECT_EQ(read_json(b / "report.json").at("seed"), 2);
}

// ----- CLI -------------------------------------------------------------------

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + COURTLENS_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = testing::scratch_dir("cli");
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("make-fixture --kind hockey --out " + (dir / "x.csv").string()), 2);
  EXPECT_EQ(cli("make-fixture --kind salary --n 60 --seed 4 --out " + (dir / "s.csv").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "s.truth.json"));

  // Data error: input file missing.
  json doc = bundled_config("four_factors");
  doc["input"] = (dir / "absent.csv").string();
  write_json(doc, dir / "absent.cfg");
  EXPECT_EQ(cli("run --config " + (dir / "absent.cfg").string() + " --out-dir " + (dir / "o1").string()), 3);

  // Numeric failure: a constant target leaves R^2 undefined.
  {
    std::ofstream csv(dir / "flat.csv");
    csv << "x,y\n";
    for (int i = 0; i < 60; ++i) csv << i << ",5\n";
  }
  const json flat = {{"input", (dir / "flat.csv").string()}, {"target", "y"}, {"model", "ols"}, {"scale", false}, {"seed", 1}};
  write_json(flat, dir / "flat.cfg");
  EXPECT_EQ(cli("run --config " + (dir / "flat.cfg").string() + " --out-dir " + (dir / "o2").string()), 4);

  // Success, with global flags after the subcommand.
  const std::string ok = "run --config " + (testing::data_dir() / "four_factors.cfg").string() + " --out-dir " + (dir / "o3").string() + " --seed 5";
  EXPECT_EQ(cli(ok), 0);
  EXPECT_EQ(read_json(dir / "o3" / "report.json").at("seed"), 5);
}

TEST(Cli, IndividualStageSubcommands) {
  const fs::path dir = testing::scratch_dir("cli_stages");
  const std::string common = " --config " + (testing::data_dir() / "salary.cfg").string() + " --out-dir " + dir.string();
  for (const auto& stage : stage_names()) EXPECT_EQ(cli(stage + common), 0) << stage;
  EXPECT_TRUE(fs::exists(dir / "report.json"));
}

}  // namespace
}  // namespace courtlens
