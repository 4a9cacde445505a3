#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vcat/data.hpp"

namespace vcat {

// Column and pair scores in [0, 1]; 1 means the synthetic data reproduces the
// real data exactly for that statistic.

/// 1 - sup_x |ECDF_real(x) - ECDF_syn(x)|.
double ks_complement(std::span<const double> real, std::span<const double> syn);

/// 1 - total variation distance between the category frequency tables.
double tv_complement(std::span<const int> real, std::span<const int> syn);

/// 1 - |rho_real - rho_syn| / 2, or nullopt when a column has zero variance
/// in either dataset.
std::optional<double> pearson_similarity(std::span<const double> real_a, std::span<const double> real_b,
                                         std::span<const double> syn_a, std::span<const double> syn_b);

/// 1 - total variation distance between the joint (a, b) frequency tables.
double contingency_similarity(std::span<const int> real_a, std::span<const int> real_b, std::span<const int> syn_a,
                              std::span<const int> syn_b);

/// Equal-width bins over a reference column's [min, max], with edge k at
/// min + (max - min) * k / bins. Values equal to an inner edge go to the upper bin; values outside the range clamp to the edge
/// bins. A constant reference collapses to a single bin.
class Binning {
 public:
  Binning(std::span<const double> reference, int bins);

  int bin(double value) const;
  std::vector<int> apply(std::span<const double> values) const;
  int bins() const noexcept { return bins_; }

 private:
  double edge(int k) const;

  double min_ = 0;
  double range_ = 0;
  int bins_ = 1;
};

/// Discretises `col` using bins derived from `col` itself.
std::vector<int> discretize(std::span<const double> col, int bins);

inline constexpr int kMixedPairBins = 10;

struct QualityReport {
  double overall = 0;
  std::vector<std::pair<std::string, double>> column_scores;
  struct PairScore {
    std::string a, b;
    double score = 0;
  };
  std::vector<PairScore> pair_scores;
  struct Skipped {
    std::string a, b, reason;
  };
  std::vector<Skipped> skipped_pairs;

  nlohmann::json to_json() const;
};

/// General quality score: the unweighted mean of every column score and every
/// unordered column-pair score. Numeric columns use KS, categorical/outcome/arm
/// columns use TV; numeric pairs use Pearson, categorical pairs the contingency
/// score, and mixed pairs the contingency score after binning the numeric side
/// over the real data's range. The enrolment order column is not scored.
QualityReport general_score(const TableView& real, const TableView& syn);

}  // namespace vcat
