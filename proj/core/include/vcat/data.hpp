#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vcat {

enum class ColumnKind { numeric, categorical, outcome, arm, enrolment_order };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& name);

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> categories;  // categorical only

  bool operator==(const ColumnSpec&) const = default;
};

// Cells are stored as doubles. Categorical cells hold the category index,
// outcome and arm cells hold 0 or 1, and NaN marks a missing cell.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) noexcept { return std::isnan(v); }

/// Column layout of a trial table.
///
/// A schema has exactly one arm column and one enrolment_order column, and at
/// most one outcome column. The outcome may be absent on raw data that still
/// needs a derived outcome; every analysis entry point checks for it.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<ColumnSpec> columns, std::vector<std::string> missing_codes = {});

  const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
  const ColumnSpec& column(std::size_t i) const { return columns_.at(i); }
  std::size_t size() const noexcept { return columns_.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws ValidationError

  bool has_outcome() const noexcept { return outcome_.has_value(); }
  std::size_t outcome_index() const;
  std::size_t arm_index() const noexcept { return arm_; }
  std::size_t order_index() const noexcept { return order_; }

  /// Number of categories a column can take (2 for outcome and arm, 0 for numeric).
  std::size_t category_count(std::size_t col) const;
  /// Display label of a categorical, outcome or arm cell value.
  std::string label(std::size_t col, double value) const;
  std::optional<int> category_code(std::size_t col, std::string_view label) const;

  const std::vector<std::string>& missing_codes() const noexcept { return missing_codes_; }
  bool is_missing_code(std::string_view text) const;

  bool operator==(const Schema& other) const { return columns_ == other.columns_; }

  nlohmann::json to_json() const;
  static Schema from_json(const nlohmann::json& doc);

 private:
  std::vector<ColumnSpec> columns_;
  std::vector<std::string> missing_codes_;
  std::optional<std::size_t> outcome_;
  std::size_t arm_ = 0;
  std::size_t order_ = 0;
};

Schema load_schema(const std::filesystem::path& path);
void save_schema(const std::filesystem::path& path, const Schema& schema);

/// Non-owning row-major view over a block of cells sharing one schema.
struct TableView {
  const Schema* schema = nullptr;
  std::span<const double> cells;
  std::size_t rows = 0;

  std::span<const double> row(std::size_t i) const {
    return cells.subspan(i * schema->size(), schema->size());
  }
  double at(std::size_t i, std::size_t col) const { return cells[i * schema->size() + col]; }
  std::vector<double> column(std::size_t col) const;
};

/// Trial records, one per patient, with the enrolment rank of each record.
///
/// Ranks are derived from the enrolment_order column: records are ordered by
/// that value (file order breaks ties) and numbered 0..m-1.
class TrialDataset {
 public:
  TrialDataset() = default;
  TrialDataset(Schema schema, std::vector<double> cells);

  const Schema& schema() const noexcept { return schema_; }
  TableView view() const { return {&schema_, cells_, rows_}; }
  std::span<const double> cells() const noexcept { return cells_; }

  std::size_t size() const noexcept { return rows_; }
  std::size_t m0() const noexcept { return control_.size(); }
  std::size_t m1() const noexcept { return rows_ - control_.size(); }

  std::span<const double> row(std::size_t i) const { return view().row(i); }
  double cell(std::size_t i, std::size_t col) const { return cells_[i * schema_.size() + col]; }
  int arm(std::size_t i) const { return static_cast<int>(cell(i, schema_.arm_index())); }
  /// Outcome of record i; throws when the schema has no outcome or the cell is missing.
  int outcome(std::size_t i) const;
  std::size_t enrolment_rank(std::size_t i) const { return ranks_[i]; }

  /// Row indices of control records, in file order.
  const std::vector<std::size_t>& control_rows() const noexcept { return control_; }
  std::vector<std::size_t> treated_rows() const;

  std::size_t missing_count(std::size_t col) const;
  bool complete() const;
  /// Throws ValidationError unless an outcome column exists and every cell is present.
  void require_analysable() const;

  /// Outcomes of the given rows, in the given order.
  std::vector<int> outcomes(std::span<const std::size_t> rows) const;

  TrialDataset subset(std::span<const std::size_t> rows) const;

 private:
  Schema schema_;
  std::vector<double> cells_;
  std::size_t rows_ = 0;
  std::vector<std::size_t> ranks_;
  std::vector<std::size_t> control_;
};

/// Selection of n distinct control records. `positions` index into
/// TrialDataset::control_rows(), so they are injective into [0, m0).
struct TrainingSet {
  std::vector<std::size_t> positions;

  std::size_t n() const noexcept { return positions.size(); }
  /// Dataset row indices of the selected records.
  std::vector<std::size_t> rows(const TrialDataset& ds) const;
  /// The selected records as their own dataset, in selection order.
  TrialDataset resolve(const TrialDataset& ds) const;
};

struct CsvOptions {
  /// Accept a header-only file (used for generator output with s = 0).
  bool allow_empty = false;
};

TrialDataset read_csv(std::istream& in, const Schema& schema, const CsvOptions& options = {});
TrialDataset load_csv(const std::filesystem::path& path, const Schema& schema,
                      const CsvOptions& options = {});
void write_csv(std::ostream& out, const TableView& table);
void write_csv(const std::filesystem::path& path, const TableView& table);

/// Shortest decimal text that round-trips to the same double.
std::string format_number(double value);

/// The n control records with the smallest enrolment rank.
TrainingSet select_n_first(const TrialDataset& ds, std::size_t n);

/// Uniform sample of n distinct control records.
TrainingSet draw_training_set(const TrialDataset& ds, std::size_t n, std::uint64_t seed);

}  // namespace vcat
