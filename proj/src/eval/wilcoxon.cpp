#include "physio/eval/wilcoxon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "physio/error.hpp"

namespace physio::eval {

namespace {

constexpr int kExactLimit = 12;

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    WilcoxonMethod method) {
  require(a.size() == b.size(), ErrorKind::kInvalidArgument, "paired samples differ in length");
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(std::isfinite(a[i]) && std::isfinite(b[i]), ErrorKind::kInvalidArgument,
            "paired samples must be finite");
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  require(!d.empty(), ErrorKind::kDegenerateComparison, "all paired differences are zero");
  const int n = static_cast<int>(d.size());
  require(n >= 5, ErrorKind::kInvalidArgument,
          "signed-rank test needs at least 5 non-zero differences");

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });
  // Doubled midranks stay integral, which keeps the exact distribution on integers.
  std::vector<int> rank2(d.size());
  double tie_term = 0.0;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s;
    while (e + 1 < order.size() && std::abs(d[order[e + 1]]) == std::abs(d[order[s]])) ++e;
    const int r2 = static_cast<int>(s + e + 2);  // 2 * midrank of positions s..e (1-based)
    for (std::size_t k = s; k <= e; ++k) rank2[order[k]] = r2;
    const double t = static_cast<double>(e - s + 1);
    tie_term += t * t * t - t;
    s = e + 1;
  }
  int w2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0.0) w2 += rank2[i];
  }

  WilcoxonResult r;
  r.n = n;
  r.statistic = w2 / 2.0;
  const bool exact =
      method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && n <= kExactLimit);
  if (exact) {
    require(n <= 20, ErrorKind::kCapacity, "exact signed-rank enumeration limited to 20 pairs");
    const int total2 = std::accumulate(rank2.begin(), rank2.end(), 0);
    std::vector<double> count(static_cast<std::size_t>(total2) + 1, 0.0);
    count[0] = 1.0;
    for (int rk : rank2) {
      for (int s = total2; s >= rk; --s) {
        count[static_cast<std::size_t>(s)] += count[static_cast<std::size_t>(s - rk)];
      }
    }
    const double all = std::ldexp(1.0, n);
    double lower = 0.0, upper = 0.0;
    for (int s = 0; s <= total2; ++s) {
      if (s <= w2) lower += count[static_cast<std::size_t>(s)];
      if (s >= w2) upper += count[static_cast<std::size_t>(s)];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    r.exact = true;
    return r;
  }

  const double nn = n;
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  require(var > 0.0, ErrorKind::kDegenerateComparison, "signed-rank variance is zero");
  const double z = std::max(0.0, std::abs(r.statistic - mean) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

}  // namespace physio::eval
