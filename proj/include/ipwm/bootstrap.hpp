#pragma once

// Non-parametric bootstrap over records.
//
// Replicate r draws its resample from make_rng(seed, {r}), so results do not
// depend on how replicates are scheduled across threads. A resample is
// represented as row multiplicities (rows drawn zero times are dropped).
// When rows already carry frequency weights (expanded count tables), the
// resample draws round(total weight) units with probability proportional to
// the weights.
//
// Percentile interval: with m successful replicates sorted ascending, the
// bound at probability q is the order statistic of rank ceil(q m) (1-based,
// clamped to [1, m]).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/parallel.hpp"
#include "ipwm/rng.hpp"

namespace ipwm {

struct BootstrapSummary {
  double point = std::numeric_limits<double>::quiet_NaN();
  double se = 0.0;
  double ci_low = std::numeric_limits<double>::quiet_NaN();
  double ci_high = std::numeric_limits<double>::quiet_NaN();
  std::size_t replicates_used = 0;
  std::size_t replicates_failed = 0;
};

/// Multiplicity of each row in one resample.
inline std::vector<double> resample_counts(const Dataset& ds, Rng& rng) {
  const std::size_t n = ds.size();
  std::vector<double> counts(n, 0.0);
  if (n == 0) return counts;
  if (ds.unit_weights()) {
    for (std::size_t k = 0; k < n; ++k) counts[uniform_index(rng, n)] += 1.0;
    return counts;
  }
  std::vector<double> cum(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += ds.freq(i);
    cum[i] = total;
  }
  const auto units = static_cast<std::uint64_t>(std::llround(total));
  for (std::uint64_t k = 0; k < units; ++k) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) --it;
    counts[static_cast<std::size_t>(it - cum.begin())] += 1.0;
  }
  return counts;
}

inline Dataset resample(const Dataset& ds, Rng& rng) {
  return ds.with_frequencies(resample_counts(ds, rng));
}

/// Value at probability q of sorted values (rank ceil(q m), 1-based).
inline double percentile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t m = sorted.size();
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  auto rank = static_cast<long long>(std::ceil(q * static_cast<double>(m) - 1e-9));
  rank = std::clamp<long long>(rank, 1, static_cast<long long>(m));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

/// Summary from replicate values (failed replicates already removed).
inline BootstrapSummary summarize_replicates(double point, std::vector<double> values,
                                             std::size_t failed, double level) {
  const std::size_t total = values.size() + failed;
  if (total == 0) throw BootstrapDegenerateError("no bootstrap replicates");
  if (2 * failed > total)
    throw BootstrapDegenerateError(std::to_string(failed) + " of " + std::to_string(total) +
                                   " bootstrap replicates failed");
  BootstrapSummary s;
  s.point = point;
  s.replicates_used = values.size();
  s.replicates_failed = failed;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m >= 2) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    s.se = std::sqrt(ss / static_cast<double>(m - 1));
  }
  const double alpha = 1.0 - level;
  s.ci_low = percentile_sorted(values, alpha / 2.0);
  s.ci_high = percentile_sorted(values, 1.0 - alpha / 2.0);
  return s;
}

namespace detail {

inline void check_bootstrap_args(int b, double level) {
  if (b < 2) throw InputError("bootstrap needs at least 2 replicates");
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must be in (0,1)");
}

}  // namespace detail

/// `estimator(const Dataset&)` returns a log odds ratio or throws. The point
/// estimate is evaluated on the original data and must succeed.
template <class Estimator>
BootstrapSummary bootstrap(const Dataset& ds, Estimator&& estimator, int b, double level,
                           std::uint64_t seed, int threads = 1) {
  detail::check_bootstrap_args(b, level);
  const double point = estimator(ds);
  std::vector<std::optional<double>> rep(static_cast<std::size_t>(b));
  parallel_for(rep.size(), threads, [&](std::size_t r) {
    Rng rng = make_rng(seed, {r});
    const Dataset bs = resample(ds, rng);
    try {
      const double v = estimator(bs);
      if (std::isfinite(v)) rep[r] = v;
    } catch (const Error&) {
    }
  });
  std::vector<double> values;
  std::size_t failed = 0;
  for (const auto& v : rep) {
    if (v) values.push_back(*v);
    else ++failed;
  }
  return summarize_replicates(point, std::move(values), failed, level);
}

/// Several statistics per resample. `estimator(const Dataset&)` returns one
/// optional value per statistic (empty = failed on that replicate);
/// `points` are the estimates on the original data (empty = unavailable).
/// Statistics whose replicates mostly fail come back empty.
template <class Estimator>
std::vector<std::optional<BootstrapSummary>> bootstrap_multi(
    const Dataset& ds, Estimator&& estimator, const std::vector<std::optional<double>>& points,
    int b, double level, std::uint64_t seed, int threads = 1) {
  detail::check_bootstrap_args(b, level);
  const std::size_t k = points.size();
  std::vector<std::vector<std::optional<double>>> rep(static_cast<std::size_t>(b));
  parallel_for(rep.size(), threads, [&](std::size_t r) {
    Rng rng = make_rng(seed, {r});
    const Dataset bs = resample(ds, rng);
    rep[r] = estimator(bs);
    rep[r].resize(k);
  });
  std::vector<std::optional<BootstrapSummary>> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    if (!points[j]) continue;
    std::vector<double> values;
    std::size_t failed = 0;
    for (const auto& row : rep) {
      if (row[j] && std::isfinite(*row[j])) values.push_back(*row[j]);
      else ++failed;
    }
    try {
      out[j] = summarize_replicates(*points[j], std::move(values), failed, level);
    } catch (const BootstrapDegenerateError&) {
    }
  }
  return out;
}

}  // namespace ipwm
