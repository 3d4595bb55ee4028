#pragma once

// Test-only oracles and fixtures. Nothing here calls into the library's
// numeric code, so agreement with it is independent evidence.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "statplan/statplan.hpp"

namespace oracle {

// Maclaurin series; converges everywhere, accurate to ~1e-15 for |x| <= 4.
inline long double erf_series(long double x) {
  long double sum = 0.0L, term = x;
  for (int n = 0; n < 200; ++n) {
    sum += term / (2 * n + 1);
    term *= -x * x / (n + 1);
  }
  return 2.0L / std::sqrt(std::numbers::pi_v<long double>) * sum;
}

inline long double upper_normal_tail(long double z) { return 0.5L * (1.0L - erf_series(z / std::sqrt(2.0L))); }

// z with P(Z > z) = alpha / 2, by bisection.
inline double z_two_sided(double alpha) {
  long double lo = 0.0L, hi = 8.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = (lo + hi) / 2;
    (upper_normal_tail(mid) > alpha / 2 ? lo : hi) = mid;
  }
  return static_cast<double>((lo + hi) / 2);
}

inline std::pair<double, double> score_interval(std::uint64_t y, std::uint64_t n, double alpha) {
  const double z = z_two_sided(alpha);
  const double yd = static_cast<double>(y), nd = static_cast<double>(n);
  const double centre = yd + z * z / 2;
  const double half = z * std::sqrt(yd * (nd - yd) / nd + z * z / 4);
  return {(centre - half) / (nd + z * z), (centre + half) / (nd + z * z)};
}

// Pascal's triangle, rows 0..n_max.
inline std::vector<std::vector<long double>> pascal(std::size_t n_max) {
  std::vector<std::vector<long double>> rows(n_max + 1);
  for (std::size_t n = 0; n <= n_max; ++n) {
    rows[n].assign(n + 1, 1.0L);
    for (std::size_t k = 1; k < n; ++k) rows[n][k] = rows[n - 1][k - 1] + rows[n - 1][k];
  }
  return rows;
}

inline long double tail_at_least(const std::vector<long double>& row, std::size_t y, long double p) {
  const std::size_t n = row.size() - 1;
  long double s = 0.0L;
  for (std::size_t i = y; i <= n; ++i) s += row[i] * std::pow(p, i) * std::pow(1.0L - p, n - i);
  return s;
}

inline long double tail_at_most(const std::vector<long double>& row, std::size_t y, long double p) {
  const std::size_t n = row.size() - 1;
  long double s = 0.0L;
  for (std::size_t i = 0; i <= y; ++i) s += row[i] * std::pow(p, i) * std::pow(1.0L - p, n - i);
  return s;
}

// First grid point where f(p) - target changes sign, scanning [0,1] at step
// 1e-3 and then the bracketing cell at step 1e-6.
template <class F>
double grid_root(F f, long double target) {
  const auto sign = [&](long double p) { return f(p) >= target; };
  const bool s0 = sign(0.0L);
  long double lo = 0.0L;
  for (int i = 1; i <= 1000; ++i) {
    const long double p = i * 1e-3L;
    if (sign(p) != s0) break;
    lo = p;
  }
  long double root = lo;
  for (int j = 1; j <= 1000; ++j) {
    const long double p = lo + j * 1e-6L;
    if (sign(p) != s0) {
      root = p - 0.5e-6L;
      break;
    }
  }
  return static_cast<double>(root);
}

inline std::pair<double, double> exact_by_scan(const std::vector<std::vector<long double>>& tri, std::size_t y,
                                               std::size_t n, double alpha) {
  const auto& row = tri[n];
  const double lo = y == 0 ? 0.0 : grid_root([&](long double p) { return tail_at_least(row, y, p); }, alpha);
  const double hi = y == n ? 1.0 : grid_root([&](long double p) { return tail_at_most(row, y, p); }, alpha);
  return {lo, hi};
}

}  // namespace oracle

namespace fixture {

using namespace statplan;

inline Catalog rail_catalog() {
  std::istringstream in(R"(@schema kind, program, couple, same-city, car1-loaded, car2-loaded
Try: kind=try
Old-Try: kind=try, program=Old
New-Try: kind=try, program=New
Noop-Try: kind=try, program=Noop
Couple: couple=true
Pre-Try: same-city=true
Pre-Try2: same-city=true, car1-loaded=true, car2-loaded=false
)");
  return Catalog::parse(in);
}

struct Tally {
  std::string program;
  std::uint64_t successes;
  std::uint64_t failures;
  bool same_city = true;
  bool car1_loaded = false;
  bool car2_loaded = false;
};

inline void add(OccurrenceStore& store, const Tally& t) {
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  for (std::uint64_t i = 0; i < t.successes + t.failures; ++i) {
    const auto id = "i" + std::to_string(store.log_size());
    const Tick at = store.log_size();
    store.ingest({id, TimeInterval(at, at + 1),
                  {{"kind", "try"},
                   {"program", t.program},
                   {"couple", b(i < t.successes)},
                   {"same-city", b(t.same_city)},
                   {"car1-loaded", b(t.car1_loaded)},
                   {"car2-loaded", b(t.car2_loaded)}}});
  }
}

inline OccurrenceStore store_with(const std::vector<Tally>& tallies) {
  OccurrenceStore store(rail_catalog());
  for (const auto& t : tallies) add(store, t);
  return store;
}

// Old 75/100 (Pre-Try2 profile) + 425/699 elsewhere same-city + 0/201 away;
// New 1/1 same-city, 0/1 away. Gives 501/1002 overall and 501/800 same-city.
inline OccurrenceStore precondition_store() {
  return store_with({{"Old", 75, 25, true, true, false},
                     {"Old", 425, 274, true, false, false},
                     {"New", 1, 0, true, false, false},
                     {"Old", 0, 201, false, false, false},
                     {"New", 0, 1, false, false, false}});
}

inline std::vector<ActionSpec> old_new(const Catalog& c) { return {{"Old", c.at("Old-Try")}, {"New", c.at("New-Try")}}; }

inline AdviceRule prefer_new() { return parse_rule_line("prefer-new: when incomparable(Old,New) prefer New", 1); }

}  // namespace fixture
