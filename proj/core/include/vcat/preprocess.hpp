#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcat/data.hpp"

namespace vcat {

/// One row of a two-column truth table. A pattern of "*" matches any
/// observed label; std::nullopt matches a missing cell. An outcome of
/// std::nullopt marks the derived outcome as missing.
struct OutcomeRuleEntry {
  std::optional<std::string> a;
  std::optional<std::string> b;
  std::optional<int> outcome;
};

struct OutcomeRule {
  std::vector<OutcomeRuleEntry> entries;  // first match wins

  static OutcomeRule from_json(const nlohmann::json& doc);
};

/// Replaces categorical columns `col_a` and `col_b` with a binary outcome
/// column named `outcome_name`, computed by `rule`. Throws if the dataset
/// already has an outcome or if an observed (a, b) pair matches no entry.
TrialDataset derive_binary_outcome(const TrialDataset& ds, const std::string& col_a,
                                   const std::string& col_b, const OutcomeRule& rule,
                                   const std::string& outcome_name = "outcome");

/// Maps the categories of a categorical column through `mapping`. The new
/// category list holds the mapped labels in first-seen order, so identical
/// targets merge. Throws if an observed category has no mapping.
TrialDataset recode_categories(const TrialDataset& ds, const std::string& column,
                               const std::map<std::string, std::string>& mapping);

}  // namespace vcat
