#include <gtest/gtest.h>

#include <sstream>

#include "vcat/error.hpp"
#include "vcat/preprocess.hpp"

namespace {

using vcat::ColumnKind;

vcat::TrialDataset raw_trial(const std::string& rows) {
  const vcat::Schema schema({{"id", ColumnKind::enrolment_order, {}},
                             {"arm", ColumnKind::arm, {}},
                             {"country", ColumnKind::categorical, {"France", "Brazil", "Italy", "Chile"}},
                             {"dead", ColumnKind::categorical, {"Y", "N"}},
                             {"dependent", ColumnKind::categorical, {"Y", "N"}}});
  std::istringstream in("id,arm,country,dead,dependent\n" + rows);
  return vcat::read_csv(in, schema);
}

vcat::OutcomeRule death_or_dependency() {
  return vcat::OutcomeRule::from_json(nlohmann::json::parse(R"([
    {"a": "Y", "b": "*", "outcome": 1},
    {"a": "Y", "b": null, "outcome": 1},
    {"a": "N", "b": "Y", "outcome": 1},
    {"a": "N", "b": "N", "outcome": 0},
    {"a": null, "b": null, "outcome": null}
  ])"));
}

TEST(DeriveOutcome, AppliesRuleAndDropsSources) {
  const auto ds = raw_trial("1,0,France,Y,N\n2,1,France,Y,\n3,0,Brazil,N,N\n4,1,Brazil,N,Y\n5,0,France,,\n");
  const auto out = vcat::derive_binary_outcome(ds, "dead", "dependent", death_or_dependency());
  ASSERT_TRUE(out.schema().has_outcome());
  EXPECT_FALSE(out.schema().find("dead"));
  EXPECT_FALSE(out.schema().find("dependent"));
  EXPECT_EQ(out.schema().size(), 4u);
  const std::size_t y = out.schema().outcome_index();
  EXPECT_EQ(out.cell(0, y), 1.0);  // dead = Y, dependent anything
  EXPECT_EQ(out.cell(1, y), 1.0);  // dead = Y, dependent missing
  EXPECT_EQ(out.cell(2, y), 0.0);  // dead = N, dependent = N
  EXPECT_EQ(out.cell(3, y), 1.0);
  EXPECT_TRUE(vcat::is_missing(out.cell(4, y)));  // both missing: left for imputation
  EXPECT_EQ(out.schema().label(out.schema().index_of("country"), out.cell(2, 2)), "Brazil");
}

TEST(DeriveOutcome, UncoveredPairIsError) {
  const auto ds = raw_trial("1,0,France,,N\n");
  EXPECT_THROW(vcat::derive_binary_outcome(ds, "dead", "dependent", death_or_dependency()), vcat::ValidationError);
}

TEST(DeriveOutcome, ExistingOutcomeOrBadRuleIsError) {
  const auto ds = raw_trial("1,0,France,Y,N\n");
  const auto once = vcat::derive_binary_outcome(ds, "dead", "dependent", death_or_dependency());
  EXPECT_THROW(vcat::derive_binary_outcome(once, "country", "country", death_or_dependency()), vcat::ValidationError);
  EXPECT_THROW(vcat::OutcomeRule::from_json(nlohmann::json::parse(R"([{"a": "Y", "b": "N", "outcome": 2}])")),
               vcat::ValidationError);
  EXPECT_THROW(vcat::derive_binary_outcome(ds, "dead", "nope", death_or_dependency()), vcat::ValidationError);
}

TEST(Recode, MergesIntoMappingImage) {
  const auto ds = raw_trial("1,0,France,Y,N\n2,1,Brazil,N,N\n3,0,Italy,N,N\n");
  const auto out = vcat::recode_categories(
      ds, "country", {{"France", "Europe"}, {"Italy", "Europe"}, {"Brazil", "South America"}, {"Chile", "South America"}});
  const std::size_t c = out.schema().index_of("country");
  EXPECT_EQ(out.schema().column(c).categories, (std::vector<std::string>{"Europe", "South America"}));
  EXPECT_EQ(out.schema().label(c, out.cell(0, c)), "Europe");
  EXPECT_EQ(out.schema().label(c, out.cell(1, c)), "South America");
  EXPECT_EQ(out.schema().label(c, out.cell(2, c)), "Europe");
}

TEST(Recode, TwoCountriesToTwoRegions) {
  const auto ds = raw_trial("1,0,France,Y,N\n2,1,Brazil,N,N\n");
  const auto out = vcat::recode_categories(ds, "country", {{"France", "Europe"}, {"Brazil", "South America"}});
  EXPECT_EQ(out.schema().category_count(out.schema().index_of("country")), 2u);
}

TEST(Recode, IdentityLeavesDataUnchanged) {
  const auto ds = raw_trial("1,0,France,Y,N\n2,1,Chile,N,\n");
  const auto out = vcat::recode_categories(
      ds, "country", {{"France", "France"}, {"Brazil", "Brazil"}, {"Italy", "Italy"}, {"Chile", "Chile"}});
  EXPECT_EQ(out.schema(), ds.schema());
  for (std::size_t i = 0; i < ds.cells().size(); ++i) {
    const double a = ds.cells()[i], b = out.cells()[i];
    EXPECT_TRUE(a == b || (vcat::is_missing(a) && vcat::is_missing(b)));
  }
}

TEST(Recode, UnmappedObservedCategoryIsError) {
  const auto ds = raw_trial("1,0,France,Y,N\n2,1,Chile,N,N\n");
  try {
    vcat::recode_categories(ds, "country", {{"France", "Europe"}, {"Brazil", "South America"}});
    FAIL();
  } catch (const vcat::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("Chile"), std::string::npos) << e.what();
  }
}

}  // namespace
