#pragma once

// Binomial confidence intervals and the interval order used to compare
// them. Everything here is a pure function of its arguments except
// ExactTable, which is an immutable lookup once loaded.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "statplan/error.hpp"
#include "statplan/text.hpp"

namespace statplan {

enum class Method { approximate, exact, degenerate };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::approximate: return "approximate";
    case Method::exact: return "exact";
    case Method::degenerate: return "degenerate";
  }
  return "?";
}

// n trials of the reference event, y of which were also successes.
struct TrialCounts {
  std::uint64_t n = 0;
  std::uint64_t y = 0;

  TrialCounts() = default;
  TrialCounts(std::uint64_t trials, std::uint64_t successes) : n(trials), y(successes) {
    if (y > n) throw DomainError("successes exceed trials");
  }

  double point_estimate() const { return n == 0 ? 0.0 : static_cast<double>(y) / n; }

  friend bool operator==(const TrialCounts&, const TrialCounts&) = default;
};

// Closed subinterval of [0,1] together with the alpha level it was computed at.
struct ProbInterval {
  double lo = 0.0;
  double hi = 1.0;
  double alpha = 0.05;
  Method method = Method::exact;

  ProbInterval() = default;
  ProbInterval(double lower, double upper, double a, Method m)
      : lo(lower), hi(upper), alpha(a), method(m) {
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) throw DomainError("interval bounds out of order or outside [0,1]");
    const bool alpha_ok = m == Method::degenerate ? (alpha > 0.0 && alpha <= 1.0) : (alpha > 0.0 && alpha < 1.0);
    if (!alpha_ok) throw DomainError("alpha out of range for interval method");
  }

  bool contains(double p) const { return lo <= p && p <= hi; }
  double width() const { return hi - lo; }
};

enum class Comparison { Less, Greater, Equal, Incomparable };

inline std::string_view to_string(Comparison c) {
  switch (c) {
    case Comparison::Less: return "Less";
    case Comparison::Greater: return "Greater";
    case Comparison::Equal: return "Equal";
    case Comparison::Incomparable: return "Incomparable";
  }
  return "?";
}

inline constexpr double kBoundEqualityTolerance = 1e-9;
inline constexpr double kAlphaMatchTolerance = 1e-12;
inline constexpr double kExactRootTolerance = 1e-10;

/// Two-sided standard normal quantile: z with P[Z < z] = 1 - alpha/2.
///
/// Acklam's rational approximation of the inverse normal CDF (relative error
/// about 1.2e-9) refined by one Halley step against std::erfc.
inline double z_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("z_quantile: alpha must lie in (0, 1]");
  if (alpha == 1.0) return 0.0;

  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                           -2.759285104469687e+02, 1.383577518672690e+02,
                                           -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                           -1.556989798598866e+02, 6.680131188771972e+01,
                                           -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                           -2.400758277161838e+00, -2.549732539343734e+00,
                                           4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                           2.445134137142996e+00, 3.754408661907416e+00};

  // Upper-tail probability; p = 1 - q lies in [0.5, 1).
  const double q = alpha / 2.0;
  const double p = 1.0 - q;
  double x = 0.0;
  if (q >= 0.02425) {
    const double r = p - 0.5;
    const double s = r * r;
    x = (((((a[0] * s + a[1]) * s + a[2]) * s + a[3]) * s + a[4]) * s + a[5]) * r /
        (((((b[0] * s + b[1]) * s + b[2]) * s + b[3]) * s + b[4]) * s + 1.0);
  } else {
    const double t = std::sqrt(-2.0 * std::log(q));
    x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  }

  const double upper = 0.5 * std::erfc(x / std::sqrt(2.0));
  const double e = upper - q;  // positive when x is still too small
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(x * x / 2.0);
  x = x + u / (1.0 - x * u / 2.0);
  return x;
}

/// Normal-approximation (score form) interval:
///   (y + z^2/2 -+ z * sqrt(y(n-y)/n + z^2/4)) / (n + z^2)
/// At alpha = 1 the interval collapses to the point y/n and is tagged degenerate.
inline ProbInterval approx_interval(TrialCounts counts, double alpha) {
  if (counts.n == 0) throw InsufficientData("approx_interval: no trials");
  const double z = z_quantile(alpha);
  const double n = static_cast<double>(counts.n);
  const double y = static_cast<double>(counts.y);
  const double z2 = z * z;
  const double centre = y + z2 / 2.0;
  const double half = z * std::sqrt(y * (n - y) / n + z2 / 4.0);
  const double denom = n + z2;
  // At y = 0 and y = n the bound is 0 or 1 analytically; rounding can miss it.
  const double lo = counts.y == 0 ? 0.0 : std::clamp((centre - half) / denom, 0.0, 1.0);
  const double hi = counts.y == counts.n ? 1.0 : std::clamp((centre + half) / denom, 0.0, 1.0);
  return ProbInterval(lo, std::max(lo, hi), alpha, z == 0.0 ? Method::degenerate : Method::approximate);
}

namespace detail {

inline double log_binomial_coefficient(std::uint64_t n, std::uint64_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double binomial_pmf(std::uint64_t n, std::uint64_t k, double p) {
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const double log_pmf = log_binomial_coefficient(n, k) + static_cast<double>(k) * std::log(p) +
                         static_cast<double>(n - k) * std::log1p(-p);
  return std::exp(log_pmf);
}

}  // namespace detail

/// P[X >= y] for X ~ Binomial(n, p). Non-decreasing in p.
inline double upper_tail(std::uint64_t n, std::uint64_t y, double p) {
  double sum = 0.0;
  for (std::uint64_t i = y; i <= n; ++i) sum += detail::binomial_pmf(n, i, p);
  return std::min(sum, 1.0);
}

/// P[X <= y] for X ~ Binomial(n, p). Non-increasing in p.
inline double lower_tail(std::uint64_t n, std::uint64_t y, double p) {
  double sum = 0.0;
  for (std::uint64_t i = 0; i <= y && i <= n; ++i) sum += detail::binomial_pmf(n, i, p);
  return std::min(sum, 1.0);
}

/// Exact binomial interval with mass alpha in each tail:
///   lower bound solves P[X >= y; p] = alpha (0 when y = 0),
///   upper bound solves P[X <= y; p] = alpha (1 when y = n).
/// Roots are bracketed on [0,1] and bisected; both tails are monotone in p.
/// alpha must not exceed 0.5, otherwise the two roots can cross.
inline ProbInterval exact_interval(TrialCounts counts, double alpha) {
  if (counts.n == 0) throw InsufficientData("exact_interval: no trials");
  if (!(alpha > 0.0 && alpha <= 0.5)) throw DomainError("exact_interval: alpha must lie in (0, 0.5]");
  const auto [n, y] = std::pair{counts.n, counts.y};

  double lower = 0.0;
  if (y > 0) {
    double a = 0.0, b = 1.0;
    while (b - a > kExactRootTolerance) {
      const double mid = 0.5 * (a + b);
      (upper_tail(n, y, mid) < alpha ? a : b) = mid;
    }
    lower = 0.5 * (a + b);
  }

  double upper = 1.0;
  if (y < n) {
    double a = 0.0, b = 1.0;
    while (b - a > kExactRootTolerance) {
      const double mid = 0.5 * (a + b);
      (lower_tail(n, y, mid) > alpha ? a : b) = mid;
    }
    upper = 0.5 * (a + b);
  }
  return ProbInterval(lower, upper, alpha, Method::exact);
}

/// The normal approximation is trusted when min(y, n - y) >= 5.
inline bool approximation_valid(TrialCounts counts) {
  if (counts.n == 0) return false;
  return std::min(counts.y, counts.n - counts.y) >= 5;
}

/// Precomputed exact intervals, one row per (n, y, alpha). Rows hold bounds
/// rounded to 6 decimals, the resolution of the on-disk format.
class ExactTable {
 public:
  ExactTable() = default;

  static ExactTable generate(std::uint64_t n_max, const std::vector<double>& alphas) {
    ExactTable table;
    for (double alpha : alphas) {
      for (std::uint64_t n = 1; n <= n_max; ++n) {
        for (std::uint64_t y = 0; y <= n; ++y) {
          const auto iv = exact_interval(TrialCounts(n, y), alpha);
          table.insert(n, y, alpha, text::round_to(iv.lo, 6), text::round_to(iv.hi, 6));
        }
      }
    }
    return table;
  }

  void insert(std::uint64_t n, std::uint64_t y, double alpha, double lo, double hi) {
    rows_[key(n, y, alpha)] = Row{alpha, lo, hi};
  }

  std::optional<ProbInterval> lookup(TrialCounts counts, double alpha) const {
    const auto it = rows_.find(key(counts.n, counts.y, alpha));
    if (it == rows_.end()) return std::nullopt;
    return ProbInterval(it->second.lo, it->second.hi, alpha, Method::exact);
  }

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  // Format: '#' comments, then whitespace-separated rows "n y alpha lo hi".
  void write(std::ostream& out) const {
    out << "# exact binomial intervals, alpha per tail\n# n y alpha lo hi\n";
    for (const auto& [k, row] : rows_) {
      const auto& [n, y, ignored] = k;
      out << n << ' ' << y << ' ' << text::shortest(row.alpha) << ' ' << text::fixed(row.lo, 6) << ' '
          << text::fixed(row.hi, 6) << '\n';
    }
  }

  static ExactTable read(std::istream& in) {
    ExactTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto body = text::trim(text::strip_comment(line));
      if (body.empty()) continue;
      const auto fields = text::split_ws(body);
      if (fields.size() != 5) throw ParseError(line_no, "expected 'n y alpha lo hi'");
      const auto n = text::parse_uint(fields[0]);
      const auto y = text::parse_uint(fields[1]);
      const auto alpha = text::parse_double(fields[2]);
      const auto lo = text::parse_double(fields[3]);
      const auto hi = text::parse_double(fields[4]);
      if (!n || !y || !alpha || !lo || !hi) throw ParseError(line_no, "non-numeric field");
      if (*y > *n || *n == 0) throw ParseError(line_no, "require 0 <= y <= n, n >= 1");
      if (!(0.0 <= *lo && *lo <= *hi && *hi <= 1.0)) throw ParseError(line_no, "bounds must satisfy 0 <= lo <= hi <= 1");
      table.insert(*n, *y, *alpha, *lo, *hi);
    }
    return table;
  }

  friend bool operator==(const ExactTable& a, const ExactTable& b) { return a.rows_ == b.rows_; }

 private:
  struct Row {
    double alpha;
    double lo;
    double hi;
    friend bool operator==(const Row&, const Row&) = default;
  };
  using Key = std::tuple<std::uint64_t, std::uint64_t, std::int64_t>;

  // alpha is keyed at 1e-9 resolution so "0.05" from disk matches 0.05 in code.
  static Key key(std::uint64_t n, std::uint64_t y, double alpha) {
    return {n, y, static_cast<std::int64_t>(std::llround(alpha * 1e9))};
  }

  std::map<Key, Row> rows_;
};

/// Exact interval when the normal approximation is invalid (table first,
/// bisection on a miss), otherwise the approximate interval.
inline ProbInterval interval_for(TrialCounts counts, double alpha, const ExactTable* table = nullptr) {
  if (counts.n == 0) throw InsufficientData("interval_for: no trials");
  if (approximation_valid(counts)) return approx_interval(counts, alpha);
  if (table != nullptr) {
    if (auto hit = table->lookup(counts, alpha)) return *hit;
  }
  return exact_interval(counts, alpha);
}

/// Interval order: a < b iff a.hi < b.lo. Equal when both bounds agree within
/// 1e-9; overlapping intervals are incomparable.
inline Comparison compare(const ProbInterval& a, const ProbInterval& b) {
  if (std::abs(a.alpha - b.alpha) > kAlphaMatchTolerance)
    throw DomainError("compare: intervals computed at different alpha levels");
  if (std::abs(a.lo - b.lo) <= kBoundEqualityTolerance && std::abs(a.hi - b.hi) <= kBoundEqualityTolerance)
    return Comparison::Equal;
  if (a.hi < b.lo) return Comparison::Less;
  if (b.hi < a.lo) return Comparison::Greater;
  return Comparison::Incomparable;
}

// "[0.4691,0.5309]"
inline std::string format_interval(const ProbInterval& iv, int decimals = 4) {
  return "[" + text::fixed(iv.lo, decimals) + "," + text::fixed(iv.hi, decimals) + "]";
}

}  // namespace statplan
