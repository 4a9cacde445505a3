#include "vcat/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include "vcat/csv.hpp"
#include "vcat/error.hpp"
#include "vcat/seed.hpp"

namespace vcat {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::outcome: return "outcome";
    case ColumnKind::arm: return "arm";
    case ColumnKind::enrolment_order: return "enrolment_order";
  }
  return "unknown";
}

ColumnKind column_kind_from_string(const std::string& name) {
  if (name == "numeric") return ColumnKind::numeric;
  if (name == "categorical") return ColumnKind::categorical;
  if (name == "outcome") return ColumnKind::outcome;
  if (name == "arm") return ColumnKind::arm;
  if (name == "enrolment_order") return ColumnKind::enrolment_order;
  throw ValidationError("unknown column kind '" + name + "'");
}

Schema::Schema(std::vector<ColumnSpec> columns, std::vector<std::string> missing_codes)
    : columns_(std::move(columns)), missing_codes_(std::move(missing_codes)) {
  std::optional<std::size_t> arm, order;
  std::set<std::string> names;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const ColumnSpec& c = columns_[i];
    if (c.name.empty()) throw ValidationError("schema: column " + std::to_string(i) + " has no name");
    if (!names.insert(c.name).second) throw ValidationError("schema: duplicate column '" + c.name + "'");
    if (c.kind == ColumnKind::categorical) {
      if (c.categories.empty()) {
        throw ValidationError("schema: categorical column '" + c.name + "' lists no categories");
      }
      std::set<std::string> seen(c.categories.begin(), c.categories.end());
      if (seen.size() != c.categories.size()) {
        throw ValidationError("schema: duplicate category in column '" + c.name + "'");
      }
    } else if (!c.categories.empty()) {
      throw ValidationError("schema: only categorical columns take categories ('" + c.name + "')");
    }
    auto claim = [&](std::optional<std::size_t>& slot) {
      if (slot) {
        throw ValidationError("schema: more than one " + to_string(c.kind) + " column ('" + c.name + "')");
      }
      slot = i;
    };
    if (c.kind == ColumnKind::outcome) claim(outcome_);
    if (c.kind == ColumnKind::arm) claim(arm);
    if (c.kind == ColumnKind::enrolment_order) claim(order);
  }
  if (!arm) throw ValidationError("schema: no arm column");
  if (!order) throw ValidationError("schema: no enrolment_order column");
  arm_ = *arm;
  order_ = *order;
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("schema has no column '" + std::string(name) + "'");
}

std::size_t Schema::outcome_index() const {
  if (!outcome_) throw ValidationError("schema has no outcome column");
  return *outcome_;
}

std::size_t Schema::category_count(std::size_t col) const {
  const ColumnSpec& c = columns_.at(col);
  switch (c.kind) {
    case ColumnKind::categorical: return c.categories.size();
    case ColumnKind::outcome:
    case ColumnKind::arm: return 2;
    default: return 0;
  }
}

std::string Schema::label(std::size_t col, double value) const {
  if (is_missing(value)) return {};
  const ColumnSpec& c = columns_.at(col);
  if (c.kind == ColumnKind::categorical) return c.categories.at(static_cast<std::size_t>(value));
  return format_number(value);
}

std::optional<int> Schema::category_code(std::size_t col, std::string_view label) const {
  const ColumnSpec& c = columns_.at(col);
  if (c.kind == ColumnKind::categorical) {
    auto it = std::find(c.categories.begin(), c.categories.end(), label);
    if (it == c.categories.end()) return std::nullopt;
    return static_cast<int>(it - c.categories.begin());
  }
  if (c.kind == ColumnKind::outcome || c.kind == ColumnKind::arm) {
    auto v = parse_double(label);
    if (v && (*v == 0.0 || *v == 1.0)) return static_cast<int>(*v);
  }
  return std::nullopt;
}

bool Schema::is_missing_code(std::string_view text) const {
  if (trim(text).empty()) return true;
  return std::find(missing_codes_.begin(), missing_codes_.end(), text) != missing_codes_.end();
}

nlohmann::json Schema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const ColumnSpec& c : columns_) {
    nlohmann::json j{{"name", c.name}, {"kind", to_string(c.kind)}};
    if (c.kind == ColumnKind::categorical) j["categories"] = c.categories;
    cols.push_back(std::move(j));
  }
  nlohmann::json doc{{"columns", std::move(cols)}};
  if (!missing_codes_.empty()) doc["missing_codes"] = missing_codes_;
  return doc;
}

Schema Schema::from_json(const nlohmann::json& doc) {
  try {
    std::vector<ColumnSpec> columns;
    for (const auto& j : doc.at("columns")) {
      ColumnSpec c;
      c.name = j.at("name").get<std::string>();
      c.kind = column_kind_from_string(j.at("kind").get<std::string>());
      if (j.contains("categories")) c.categories = j.at("categories").get<std::vector<std::string>>();
      columns.push_back(std::move(c));
    }
    std::vector<std::string> missing;
    if (doc.contains("missing_codes")) missing = doc.at("missing_codes").get<std::vector<std::string>>();
    return Schema(std::move(columns), std::move(missing));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("schema: ") + e.what());
  }
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("schema file " + path.string() + ": " + e.what());
  }
  return Schema::from_json(doc);
}

void save_schema(const std::filesystem::path& path, const Schema& schema) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << schema.to_json().dump(2) << '\n';
}

std::vector<double> TableView::column(std::size_t col) const {
  std::vector<double> out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = at(i, col);
  return out;
}

TrialDataset::TrialDataset(Schema schema, std::vector<double> cells)
    : schema_(std::move(schema)), cells_(std::move(cells)) {
  const std::size_t width = schema_.size();
  if (width == 0 || cells_.size() % width != 0) {
    throw ValidationError("dataset: cell count is not a multiple of the schema width");
  }
  rows_ = cells_.size() / width;

  const std::size_t arm_col = schema_.arm_index();
  const std::size_t order_col = schema_.order_index();
  for (std::size_t i = 0; i < rows_; ++i) {
    const double a = cell(i, arm_col);
    if (a != 0.0 && a != 1.0) {
      throw ValidationError("dataset: row " + std::to_string(i) + " has arm outside {0,1}");
    }
    if (is_missing(cell(i, order_col))) {
      throw ValidationError("dataset: row " + std::to_string(i) + " has no enrolment order");
    }
    if (a == 0.0) control_.push_back(i);
    for (std::size_t c = 0; c < width; ++c) {
      const double v = cell(i, c);
      if (is_missing(v)) continue;
      const std::size_t k = schema_.category_count(c);
      if (k > 0 && (v < 0 || v >= static_cast<double>(k) || v != std::floor(v))) {
        throw ValidationError("dataset: row " + std::to_string(i) + ", column '" +
                              schema_.column(c).name + "' holds an invalid category code");
      }
    }
  }

  std::vector<std::size_t> order(rows_);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cell(a, order_col) < cell(b, order_col);
  });
  ranks_.resize(rows_);
  for (std::size_t r = 0; r < rows_; ++r) ranks_[order[r]] = r;
}

int TrialDataset::outcome(std::size_t i) const {
  const double v = cell(i, schema_.outcome_index());
  if (is_missing(v)) throw ValidationError("dataset: outcome of row " + std::to_string(i) + " is missing");
  return static_cast<int>(v);
}

std::vector<std::size_t> TrialDataset::treated_rows() const {
  std::vector<std::size_t> out;
  out.reserve(m1());
  for (std::size_t i = 0; i < rows_; ++i) {
    if (arm(i) == 1) out.push_back(i);
  }
  return out;
}

std::size_t TrialDataset::missing_count(std::size_t col) const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < rows_; ++i) count += is_missing(cell(i, col));
  return count;
}

bool TrialDataset::complete() const {
  return std::none_of(cells_.begin(), cells_.end(), [](double v) { return is_missing(v); });
}

void TrialDataset::require_analysable() const {
  if (!schema_.has_outcome()) throw ValidationError("dataset has no outcome column");
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (const std::size_t k = missing_count(c); k > 0) {
      throw ValidationError("dataset: column '" + schema_.column(c).name + "' has " +
                            std::to_string(k) + " missing cells; impute first");
    }
  }
}

std::vector<int> TrialDataset::outcomes(std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(outcome(r));
  return out;
}

TrialDataset TrialDataset::subset(std::span<const std::size_t> rows) const {
  const std::size_t width = schema_.size();
  std::vector<double> cells;
  cells.reserve(rows.size() * width);
  for (std::size_t r : rows) {
    auto src = row(r);
    cells.insert(cells.end(), src.begin(), src.end());
  }
  return TrialDataset(schema_, std::move(cells));
}

std::vector<std::size_t> TrainingSet::rows(const TrialDataset& ds) const {
  std::vector<std::size_t> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) out.push_back(ds.control_rows().at(p));
  return out;
}

TrialDataset TrainingSet::resolve(const TrialDataset& ds) const {
  const auto r = rows(ds);
  return ds.subset(r);
}

TrialDataset read_csv(std::istream& in, const Schema& schema, const CsvOptions& options) {
  csv::Reader reader(in);
  csv::Row header;
  if (!reader.next(header)) throw ValidationError("csv: missing header row");

  // Map file columns onto schema columns by name.
  std::vector<std::size_t> target(header.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name(trim(header[i]));
    if (!seen.insert(name).second) throw ValidationError("csv: duplicate header '" + name + "'");
    auto idx = schema.find(name);
    if (!idx) throw ValidationError("csv: header column '" + name + "' is not in the schema");
    target[i] = *idx;
  }
  for (const ColumnSpec& c : schema.columns()) {
    if (!seen.count(c.name)) throw ValidationError("csv: schema column '" + c.name + "' missing from header");
  }

  const std::size_t width = schema.size();
  std::vector<double> cells;
  csv::Row row;
  std::size_t record = 0;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty() && width > 1) continue;
    ++record;
    if (row.size() != header.size()) {
      throw ValidationError("csv: row " + std::to_string(record) + " (line " +
                            std::to_string(reader.line()) + ") has " + std::to_string(row.size()) +
                            " fields, expected " + std::to_string(header.size()));
    }
    const std::size_t base = cells.size();
    cells.resize(base + width, kMissing);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::size_t col = target[i];
      const ColumnSpec& spec = schema.column(col);
      const std::string_view text = row[i];
      if (schema.is_missing_code(text)) continue;
      auto fail = [&](const std::string& why) {
        throw ValidationError("csv: row " + std::to_string(record) + ", column '" + spec.name +
                              "': " + why + " '" + std::string(text) + "'");
      };
      switch (spec.kind) {
        case ColumnKind::categorical:
        case ColumnKind::outcome:
        case ColumnKind::arm: {
          auto code = schema.category_code(col, trim(text));
          if (!code) fail(spec.kind == ColumnKind::categorical ? "unknown category" : "expected 0 or 1, got");
          cells[base + col] = *code;
          break;
        }
        case ColumnKind::numeric:
        case ColumnKind::enrolment_order: {
          auto v = parse_double(text);
          if (!v) fail("cannot parse number");
          cells[base + col] = *v;
          break;
        }
      }
    }
    if (is_missing(cells[base + schema.arm_index()])) {
      throw ValidationError("csv: row " + std::to_string(record) + ", column '" +
                            schema.column(schema.arm_index()).name + "': arm is missing");
    }
    if (is_missing(cells[base + schema.order_index()])) {
      throw ValidationError("csv: row " + std::to_string(record) + ", column '" +
                            schema.column(schema.order_index()).name + "': enrolment order is missing");
    }
  }
  if (record == 0 && !options.allow_empty) throw ValidationError("csv: no records");
  return TrialDataset(schema, std::move(cells));
}

TrialDataset load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open data file " + path.string());
  try {
    return read_csv(in, schema, options);
  } catch (const ValidationError& e) {
    throw ValidationError(path.filename().string() + ": " + e.what());
  }
}

std::string format_number(double value) {
  if (is_missing(value)) return {};
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const TableView& table) {
  const Schema& schema = *table.schema;
  csv::Row row;
  for (const ColumnSpec& c : schema.columns()) row.push_back(c.name);
  csv::write_row(out, row);
  for (std::size_t i = 0; i < table.rows; ++i) {
    row.clear();
    for (std::size_t c = 0; c < schema.size(); ++c) row.push_back(schema.label(c, table.at(i, c)));
    csv::write_row(out, row);
  }
}

void write_csv(const std::filesystem::path& path, const TableView& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, table);
}

TrainingSet select_n_first(const TrialDataset& ds, std::size_t n) {
  if (n < 1 || n > ds.m0()) {
    throw ValidationError("select_n_first: n = " + std::to_string(n) + " outside [1, " +
                          std::to_string(ds.m0()) + "]");
  }
  std::vector<std::size_t> positions(ds.m0());
  std::iota(positions.begin(), positions.end(), 0);
  const auto& control = ds.control_rows();
  std::partial_sort(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(n), positions.end(),
                    [&](std::size_t a, std::size_t b) {
                      return ds.enrolment_rank(control[a]) < ds.enrolment_rank(control[b]);
                    });
  positions.resize(n);
  return TrainingSet{std::move(positions)};
}

TrainingSet draw_training_set(const TrialDataset& ds, std::size_t n, std::uint64_t seed) {
  const std::size_t m0 = ds.m0();
  if (n < 1 || n > m0) {
    throw ValidationError("draw_training_set: n = " + std::to_string(n) + " outside [1, " +
                          std::to_string(m0) + "]");
  }
  std::vector<std::size_t> pool(m0);
  std::iota(pool.begin(), pool.end(), 0);
  Engine rng = make_engine(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, m0 - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(n);
  return TrainingSet{std::move(pool)};
}

}  // namespace vcat
