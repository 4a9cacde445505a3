#include "vcat/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vcat/error.hpp"

namespace vcat {

namespace {

void require_non_empty(std::size_t a, std::size_t b, const char* what) {
  if (a == 0 || b == 0) throw ValidationError(std::string(what) + ": empty input");
}

template <class Key>
double tv_distance(const std::map<Key, double>& p, const std::map<Key, double>& q) {
  double sum = 0;
  auto i = p.begin();
  auto j = q.begin();
  while (i != p.end() || j != q.end()) {
    if (j == q.end() || (i != p.end() && i->first < j->first)) {
      sum += i->second;
      ++i;
    } else if (i == p.end() || j->first < i->first) {
      sum += j->second;
      ++j;
    } else {
      sum += std::abs(i->second - j->second);
      ++i;
      ++j;
    }
  }
  return 0.5 * sum;
}

template <class Key, class KeyOf>
std::map<Key, double> frequencies(std::size_t n, KeyOf key_of) {
  std::map<Key, double> counts;
  for (std::size_t i = 0; i < n; ++i) counts[key_of(i)] += 1.0;
  for (auto& [k, v] : counts) v /= static_cast<double>(n);
  return counts;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<int> codes(const TableView& t, std::size_t col) {
  std::vector<int> out(t.rows);
  for (std::size_t i = 0; i < t.rows; ++i) out[i] = static_cast<int>(t.at(i, col));
  return out;
}

}  // namespace

double ks_complement(std::span<const double> real, std::span<const double> syn) {
  require_non_empty(real.size(), syn.size(), "ks_complement");
  std::vector<double> a(real.begin(), real.end()), b(syn.begin(), syn.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const auto na = static_cast<double>(a.size());
  const auto nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double sup = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return 1.0 - sup;
}

double tv_complement(std::span<const int> real, std::span<const int> syn) {
  require_non_empty(real.size(), syn.size(), "tv_complement");
  const auto p = frequencies<int>(real.size(), [&](std::size_t i) { return real[i]; });
  const auto q = frequencies<int>(syn.size(), [&](std::size_t i) { return syn[i]; });
  return std::clamp(1.0 - tv_distance(p, q), 0.0, 1.0);
}

std::optional<double> pearson_similarity(std::span<const double> real_a, std::span<const double> real_b,
                                         std::span<const double> syn_a, std::span<const double> syn_b) {
  require_non_empty(real_a.size(), syn_a.size(), "pearson_similarity");
  if (real_a.size() != real_b.size() || syn_a.size() != syn_b.size()) {
    throw ValidationError("pearson_similarity: column lengths differ");
  }
  const auto r = pearson(real_a, real_b);
  const auto s = pearson(syn_a, syn_b);
  if (!r || !s) return std::nullopt;
  return 1.0 - std::abs(*r - *s) / 2.0;
}

double contingency_similarity(std::span<const int> real_a, std::span<const int> real_b, std::span<const int> syn_a,
                              std::span<const int> syn_b) {
  require_non_empty(real_a.size(), syn_a.size(), "contingency_similarity");
  if (real_a.size() != real_b.size() || syn_a.size() != syn_b.size()) {
    throw ValidationError("contingency_similarity: column lengths differ");
  }
  using Cell = std::pair<int, int>;
  const auto p = frequencies<Cell>(real_a.size(), [&](std::size_t i) { return Cell{real_a[i], real_b[i]}; });
  const auto q = frequencies<Cell>(syn_a.size(), [&](std::size_t i) { return Cell{syn_a[i], syn_b[i]}; });
  return std::clamp(1.0 - tv_distance(p, q), 0.0, 1.0);
}

Binning::Binning(std::span<const double> reference, int bins) : bins_(bins) {
  if (bins < 1) throw ValidationError("discretize: bins must be >= 1");
  if (reference.empty()) throw ValidationError("discretize: empty reference column");
  const auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
  min_ = *lo;
  range_ = *hi - *lo;
  if (!(range_ > 0)) bins_ = 1;
}

double Binning::edge(int k) const { return min_ + range_ * k / bins_; }

int Binning::bin(double value) const {
  if (bins_ == 1) return 0;
  const double pos = std::floor((value - min_) / range_ * bins_);
  int b = pos > 0 ? static_cast<int>(std::min(pos, static_cast<double>(bins_ - 1))) : 0;
  while (b + 1 < bins_ && value >= edge(b + 1)) ++b;
  while (b > 0 && value < edge(b)) --b;
  return b;
}

std::vector<int> Binning::apply(std::span<const double> values) const {
  std::vector<int> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [this](double v) { return bin(v); });
  return out;
}

std::vector<int> discretize(std::span<const double> col, int bins) { return Binning(col, bins).apply(col); }

nlohmann::json QualityReport::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& [name, score] : column_scores) cols.push_back({{"column", name}, {"score", score}});
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : pair_scores) pairs.push_back({{"a", p.a}, {"b", p.b}, {"score", p.score}});
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : skipped_pairs) skipped.push_back({{"a", s.a}, {"b", s.b}, {"reason", s.reason}});
  return {{"overall", overall}, {"column_scores", cols}, {"pair_scores", pairs}, {"skipped_pairs", skipped}};
}

QualityReport general_score(const TableView& real, const TableView& syn) {
  const Schema& schema = *real.schema;
  if (!(schema == *syn.schema)) throw ValidationError("general_score: schemas differ");
  if (real.rows == 0 || syn.rows == 0) throw ValidationError("general_score: empty input");
  for (const TableView* t : {&real, &syn}) {
    if (std::any_of(t->cells.begin(), t->cells.end(), [](double v) { return is_missing(v); })) {
      throw ValidationError("general_score: tables must not contain missing cells");
    }
  }

  std::vector<std::size_t> scored;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema.column(c).kind != ColumnKind::enrolment_order) scored.push_back(c);
  }
  auto numeric = [&](std::size_t c) { return schema.column(c).kind == ColumnKind::numeric; };

  QualityReport report;
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t c : scored) {
    const double score = numeric(c) ? ks_complement(real.column(c), syn.column(c))
                                    : tv_complement(codes(real, c), codes(syn, c));
    report.column_scores.emplace_back(schema.column(c).name, score);
    sum += score;
    ++count;
  }

  for (std::size_t i = 0; i < scored.size(); ++i) {
    for (std::size_t j = i + 1; j < scored.size(); ++j) {
      const std::size_t a = scored[i], b = scored[j];
      const std::string& na = schema.column(a).name;
      const std::string& nb = schema.column(b).name;
      std::optional<double> score;
      if (numeric(a) && numeric(b)) {
        score = pearson_similarity(real.column(a), real.column(b), syn.column(a), syn.column(b));
        if (!score) {
          report.skipped_pairs.push_back({na, nb, "zero variance in a numeric column"});
          continue;
        }
      } else {
        auto as_codes = [&](const TableView& t, std::size_t c) {
          if (!numeric(c)) return codes(t, c);
          return Binning(real.column(c), kMixedPairBins).apply(t.column(c));
        };
        score = contingency_similarity(as_codes(real, a), as_codes(real, b), as_codes(syn, a), as_codes(syn, b));
      }
      report.pair_scores.push_back({na, nb, *score});
      sum += *score;
      ++count;
    }
  }
  report.overall = count ? sum / static_cast<double>(count) : 0.0;
  return report;
}

}  // namespace vcat
