#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "vcat/error.hpp"
#include "vcat/generators.hpp"
#include "vcat/subprocess.hpp"

namespace {

using vcat::ColumnKind;

const std::filesystem::path kMock = VCAT_MOCK_GENERATOR;

vcat::Schema schema() {
  return vcat::Schema({{"order", ColumnKind::enrolment_order, {}},
                       {"arm", ColumnKind::arm, {}},
                       {"x", ColumnKind::numeric, {}},
                       {"c", ColumnKind::categorical, {"a", "b"}},
                       {"y", ColumnKind::outcome, {}}});
}

vcat::TrialDataset train(std::size_t n) {
  std::vector<double> cells;
  for (std::size_t i = 0; i < n; ++i) {
    cells.insert(cells.end(), {static_cast<double>(i), 0.0, 0.5 * static_cast<double>(i), static_cast<double>(i % 2),
                               static_cast<double>(i % 3 == 0)});
  }
  return vcat::TrialDataset(schema(), cells);
}

vcat::GeneratorConfig mock_config(const std::string& name, const std::string& mode = "") {
  vcat::GeneratorConfig config;
  config.kind = vcat::GeneratorKind::external;
  config.executable = kMock;
  config.work_dir = fixtures::scratch(name);
  if (!mode.empty()) config.params = {{"mode", mode}};
  return config;
}

TEST(Subprocess, CapturesExitCodeAndStderr) {
  const auto r = vcat::run_process("/bin/sh", {"-c", "echo oops >&2; echo out; exit 7"});
  EXPECT_EQ(r.exit_code, 7);
  EXPECT_EQ(r.stderr_text, "oops\n");
}

TEST(Subprocess, SignalDeathMapsAbove128) {
  EXPECT_EQ(vcat::run_process("/bin/sh", {"-c", "kill -9 $$"}).exit_code, 128 + 9);
}

TEST(Subprocess, MissingExecutableIsProtocolError) {
  EXPECT_THROW(vcat::run_process("/nonexistent/tool", {}), vcat::ProtocolError);
}

TEST(External, MockResamplerSatisfiesBootstrapMembership) {
  const auto data = train(12);
  const auto model = vcat::fit(mock_config("ext_member"), data, 5);
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < data.size(); ++i) rows.insert({data.cell(i, 2), data.cell(i, 3), data.cell(i, 4)});
  const auto batch = vcat::sample(model, 200, 8);
  ASSERT_EQ(batch.size(), 200u);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto r = batch.view().row(i);
    EXPECT_TRUE(rows.count({r[2], r[3], r[4]}));
    EXPECT_EQ(r[1], 0.0);
    EXPECT_EQ(r[0], static_cast<double>(12 + i));
  }
  EXPECT_EQ(vcat::sample(model, 50, 3).cells, vcat::sample(model, 50, 3).cells);
}

TEST(External, HyperparametersAndProtocolFilesReachTheModelDir) {
  auto config = mock_config("ext_files");
  config.params = {{"note", "kept"}};
  const auto model = vcat::fit(config, train(4), 0x2a);
  const auto& p = std::get<vcat::ExternalParams>(model.params);
  EXPECT_TRUE(std::filesystem::exists(p.model_dir / "train.csv"));
  EXPECT_TRUE(std::filesystem::exists(p.model_dir / "schema.json"));
  EXPECT_EQ(nlohmann::json::parse(fixtures::read_file(p.model_dir / "hyperparams.json")), config.params);
  EXPECT_EQ(fixtures::read_file(p.model_dir / "fit-seed.txt"), "42\n");
  EXPECT_EQ(p.model_dir.parent_path(), config.work_dir);
}

TEST(External, ZeroRowsSkipsTheSubprocess) {
  const auto model = vcat::fit(mock_config("ext_zero", "exit5"), train(4), 1);
  EXPECT_EQ(vcat::sample(model, 0, 1).size(), 0u);
}

TEST(External, ShortOutputIsRowCountMismatch) {
  const auto model = vcat::fit(mock_config("ext_short", "short"), train(6), 1);
  try {
    vcat::sample(model, 10, 2);
    FAIL();
  } catch (const vcat::ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("row count mismatch"), std::string::npos) << e.what();
  }
}

TEST(External, OutOfVocabularyCategoryNamesColumn) {
  const auto model = vcat::fit(mock_config("ext_badcat", "badcat"), train(6), 1);
  try {
    vcat::sample(model, 10, 2);
    FAIL();
  } catch (const vcat::ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("column 'c'"), std::string::npos) << e.what();
  }
}

TEST(External, NonzeroExitCarriesChildStderr) {
  const auto model = vcat::fit(mock_config("ext_exit", "exit5"), train(6), 1);
  try {
    vcat::sample(model, 10, 2);
    FAIL();
  } catch (const vcat::ProtocolError& e) {
    EXPECT_NE(std::string(e.what()).find("code 5"), std::string::npos) << e.what();
    EXPECT_NE(e.child_stderr().find("sampler crashed"), std::string::npos);
  }
  EXPECT_THROW(vcat::fit(mock_config("ext_fitfail", "fitfail"), train(6), 1), vcat::ProtocolError);
}

TEST(External, FitSampleOnFilesOnDisk) {
  const auto dir = fixtures::scratch("ext_files_on_disk");
  const auto data = train(9);
  vcat::write_csv(dir / "train.csv", data.view());
  vcat::save_schema(dir / "schema.json", data.schema());
  const auto batch = vcat::external_fit_sample(kMock, dir / "train.csv", dir / "schema.json", 25, 4, dir / "model");
  EXPECT_EQ(batch.size(), 25u);
  EXPECT_NO_THROW(batch.to_dataset());
}

}  // namespace
