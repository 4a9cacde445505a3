#include "vcat/preprocess.hpp"

#include <algorithm>

#include "vcat/error.hpp"

namespace vcat {

OutcomeRule OutcomeRule::from_json(const nlohmann::json& doc) {
  OutcomeRule rule;
  try {
    for (const auto& e : doc) {
      OutcomeRuleEntry entry;
      auto pattern = [&](const char* key) -> std::optional<std::string> {
        const auto& v = e.at(key);
        if (v.is_null()) return std::nullopt;
        return v.get<std::string>();
      };
      entry.a = pattern("a");
      entry.b = pattern("b");
      if (!e.at("outcome").is_null()) {
        const int y = e.at("outcome").get<int>();
        if (y != 0 && y != 1) throw ValidationError("outcome rule: outcome must be 0, 1 or null");
        entry.outcome = y;
      }
      rule.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("outcome rule: ") + e.what());
  }
  return rule;
}

namespace {

bool matches(const std::optional<std::string>& pattern, const std::optional<std::string>& value) {
  if (!pattern) return !value.has_value();
  if (*pattern == "*") return value.has_value();
  return value && *value == *pattern;
}

}  // namespace

TrialDataset derive_binary_outcome(const TrialDataset& ds, const std::string& col_a,
                                   const std::string& col_b, const OutcomeRule& rule,
                                   const std::string& outcome_name) {
  const Schema& schema = ds.schema();
  if (schema.has_outcome()) throw ValidationError("derive_binary_outcome: dataset already has an outcome column");
  const std::size_t ia = schema.index_of(col_a);
  const std::size_t ib = schema.index_of(col_b);
  if (ia == ib) throw ValidationError("derive_binary_outcome: source columns must differ");
  for (std::size_t c : {ia, ib}) {
    if (schema.column(c).kind != ColumnKind::categorical) {
      throw ValidationError("derive_binary_outcome: column '" + schema.column(c).name + "' is not categorical");
    }
  }
  if (schema.find(outcome_name) && outcome_name != col_a && outcome_name != col_b) {
    throw ValidationError("derive_binary_outcome: column '" + outcome_name + "' already exists");
  }

  std::vector<ColumnSpec> columns;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (c == ia || c == ib) continue;
    columns.push_back(schema.column(c));
    kept.push_back(c);
  }
  columns.push_back({outcome_name, ColumnKind::outcome, {}});
  Schema out_schema(std::move(columns), schema.missing_codes());

  auto label = [&](std::size_t row, std::size_t col) -> std::optional<std::string> {
    const double v = ds.cell(row, col);
    if (is_missing(v)) return std::nullopt;
    return schema.label(col, v);
  };

  std::vector<double> cells;
  cells.reserve(ds.size() * out_schema.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t c : kept) cells.push_back(ds.cell(i, c));
    const auto a = label(i, ia);
    const auto b = label(i, ib);
    auto hit = std::find_if(rule.entries.begin(), rule.entries.end(),
                            [&](const OutcomeRuleEntry& e) { return matches(e.a, a) && matches(e.b, b); });
    if (hit == rule.entries.end()) {
      throw ValidationError("derive_binary_outcome: no rule for (" + col_a + "=" + a.value_or("<missing>") +
                            ", " + col_b + "=" + b.value_or("<missing>") + ") in row " + std::to_string(i + 1));
    }
    cells.push_back(hit->outcome ? static_cast<double>(*hit->outcome) : kMissing);
  }
  return TrialDataset(std::move(out_schema), std::move(cells));
}

TrialDataset recode_categories(const TrialDataset& ds, const std::string& column,
                               const std::map<std::string, std::string>& mapping) {
  const Schema& schema = ds.schema();
  const std::size_t col = schema.index_of(column);
  const ColumnSpec& spec = schema.column(col);
  if (spec.kind != ColumnKind::categorical) {
    throw ValidationError("recode_categories: column '" + column + "' is not categorical");
  }

  std::vector<bool> observed(spec.categories.size(), false);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double v = ds.cell(i, col);
    if (!is_missing(v)) observed[static_cast<std::size_t>(v)] = true;
  }

  std::vector<std::string> categories;
  std::vector<double> code(spec.categories.size(), kMissing);
  for (std::size_t k = 0; k < spec.categories.size(); ++k) {
    auto it = mapping.find(spec.categories[k]);
    if (it == mapping.end()) {
      if (observed[k]) {
        throw ValidationError("recode_categories: no mapping for observed category '" + spec.categories[k] +
                              "' in column '" + column + "'");
      }
      continue;
    }
    auto pos = std::find(categories.begin(), categories.end(), it->second);
    if (pos == categories.end()) pos = categories.insert(categories.end(), it->second);
    code[k] = static_cast<double>(pos - categories.begin());
  }

  std::vector<ColumnSpec> columns = schema.columns();
  columns[col].categories = std::move(categories);
  std::vector<double> cells(ds.cells().begin(), ds.cells().end());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double& v = cells[i * schema.size() + col];
    if (!is_missing(v)) v = code[static_cast<std::size_t>(v)];
  }
  return TrialDataset(Schema(std::move(columns), schema.missing_codes()), std::move(cells));
}

}  // namespace vcat
