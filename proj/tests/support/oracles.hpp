#pragma once

// Brute-force reference computations written independently of the library:
// plain two-pass sums over doubles, pointwise ECDF enumeration, map-based
// frequency tables and interval set logic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline constexpr double z = 1.959964;

struct MeanVar {
  double mean = 0;
  double var = 0;
};

inline MeanVar mean_var(const std::vector<int>& y) {
  double sum = 0;
  for (int v : y) sum += v;
  const double mean = sum / static_cast<double>(y.size());
  double sq = 0;
  for (int v : y) sq += (v - mean) * (v - mean);
  return {mean, sq / static_cast<double>(y.size())};
}

struct Estimate {
  double tau = 0, sigma2 = 0, delta = 0, lo = 0, hi = 0;
};

inline Estimate from_parts(const std::vector<int>& treated, double control_mean, double control_var, std::size_t m0) {
  const MeanVar t = mean_var(treated);
  Estimate e;
  e.tau = t.mean - control_mean;
  e.sigma2 = control_var;
  e.delta = z * std::sqrt(t.var / static_cast<double>(treated.size()) + control_var / static_cast<double>(m0));
  e.lo = e.tau - e.delta;
  e.hi = e.tau + e.delta;
  return e;
}

inline Estimate rct(const std::vector<int>& treated, const std::vector<int>& control) {
  const MeanVar c = mean_var(control);
  return from_parts(treated, c.mean, c.var, control.size());
}

inline Estimate one_shot(const std::vector<int>& train, const std::vector<int>& gen, const std::vector<int>& treated) {
  std::vector<int> all = train;
  all.insert(all.end(), gen.begin(), gen.end());
  return rct(treated, all);
}

/// Per-replicate effects and variances, then their plain averages.
inline Estimate averaged(const std::vector<int>& train, const std::vector<std::vector<int>>& batches,
                         const std::vector<int>& treated) {
  const MeanVar t = mean_var(treated);
  double tau_sum = 0, var_sum = 0;
  std::size_t m0 = 0;
  for (const auto& b : batches) {
    std::vector<int> all = train;
    all.insert(all.end(), b.begin(), b.end());
    const MeanVar c = mean_var(all);
    tau_sum += t.mean - c.mean;
    var_sum += c.var;
    m0 = all.size();
  }
  const double l = static_cast<double>(batches.size());
  Estimate e;
  e.tau = tau_sum / l;
  e.sigma2 = var_sum / l;
  e.delta = z * std::sqrt(t.var / static_cast<double>(treated.size()) + e.sigma2 / static_cast<double>(m0));
  e.lo = e.tau - e.delta;
  e.hi = e.tau + e.delta;
  return e;
}

enum class Sign { positive, negative, none };

/// Significance from membership of 0 in the closed interval.
inline Sign significance(double lo, double hi) {
  const bool zero_inside = lo <= 0.0 && 0.0 <= hi;
  if (zero_inside) return Sign::none;
  return hi < 0.0 ? Sign::negative : Sign::positive;
}

/// Closed intervals are disjoint when their intersection is empty.
inline bool disjoint(double lo, double hi, double rlo, double rhi) { return std::max(lo, rlo) > std::min(hi, rhi); }

inline std::pair<double, double> mse(const std::vector<double>& taus, double bar) {
  double sum = 0;
  for (double t : taus) {
    const double d = t - bar;
    sum += d * d;
  }
  const double m = sum / static_cast<double>(taus.size());
  return {m, std::sqrt(m)};
}

/// sup |F_real - F_syn| evaluated at every observed point, counting by scan.
inline double ks_complement(const std::vector<double>& real, const std::vector<double>& syn) {
  std::vector<double> points = real;
  points.insert(points.end(), syn.begin(), syn.end());
  double sup = 0;
  for (double x : points) {
    double fr = 0, fs = 0;
    for (double v : real) fr += v <= x ? 1 : 0;
    for (double v : syn) fs += v <= x ? 1 : 0;
    sup = std::max(sup, std::abs(fr / static_cast<double>(real.size()) - fs / static_cast<double>(syn.size())));
  }
  return 1.0 - sup;
}

template <class K>
double tv_complement_keys(const std::vector<K>& real, const std::vector<K>& syn) {
  std::map<K, double> p, q;
  std::set<K> keys;
  for (const K& k : real) {
    p[k] += 1.0 / static_cast<double>(real.size());
    keys.insert(k);
  }
  for (const K& k : syn) {
    q[k] += 1.0 / static_cast<double>(syn.size());
    keys.insert(k);
  }
  double tv = 0;
  for (const K& k : keys) tv += std::abs(p[k] - q[k]);
  return 1.0 - tv / 2.0;
}

inline double tv_complement(const std::vector<int>& real, const std::vector<int>& syn) {
  return tv_complement_keys(real, syn);
}

inline double contingency(const std::vector<int>& ra, const std::vector<int>& rb, const std::vector<int>& sa,
                          const std::vector<int>& sb) {
  std::vector<std::pair<int, int>> r, s;
  for (std::size_t i = 0; i < ra.size(); ++i) r.emplace_back(ra[i], rb[i]);
  for (std::size_t i = 0; i < sa.size(); ++i) s.emplace_back(sa[i], sb[i]);
  return tv_complement_keys(r, s);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double cxy = 0, cxx = 0, cyy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    cxy += (x[i] - mx) * (y[i] - my);
    cxx += (x[i] - mx) * (x[i] - mx);
    cyy += (y[i] - my) * (y[i] - my);
  }
  return cxy / std::sqrt(cxx * cyy);
}

}  // namespace oracle
