// Compiled with -ffast-math so the inner loop vectorises through libmvec's exp.
// No inf/NaN handling belongs in this file.
#include <cmath>
#include <cstdint>
#include <vector>

#include "physio/features/entropy.hpp"

namespace physio::features::kernel {

namespace {

// Column-major mean-removed templates: cols[k][i] = x[i + k] - mean_i.
std::vector<std::vector<double>> centred_templates(std::span<const double> x, int len,
                                                   std::int64_t count) {
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(len),
                                        std::vector<double>(static_cast<std::size_t>(count)));
  for (std::int64_t i = 0; i < count; ++i) {
    double mu = 0.0;
    for (int k = 0; k < len; ++k) mu += x[static_cast<std::size_t>(i + k)];
    mu /= len;
    for (int k = 0; k < len; ++k) {
      cols[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
          x[static_cast<std::size_t>(i + k)] - mu;
    }
  }
  return cols;
}

template <int P>
inline double power(double d) {
  if constexpr (P == 1) {
    return d;
  } else if constexpr (P == 2) {
    return d * d;
  } else {
    return d * d * d;
  }
}

template <int M, int P>
FuzzySums sums_fixed(std::span<const double> x, double scale) {
  const auto nt = static_cast<std::int64_t>(x.size()) - M;
  const auto a = centred_templates(x, M, nt);
  const auto b = centred_templates(x, M + 1, nt);
  std::vector<double> row_m(static_cast<std::size_t>(nt), 0.0);
  std::vector<double> row_m1(static_cast<std::size_t>(nt), 0.0);

#pragma omp parallel for schedule(dynamic, 32)
  for (std::int64_t i = 0; i < nt; ++i) {
    double ai[M];
    double bi[M + 1];
    const double* ac[M];
    const double* bc[M + 1];
    for (int k = 0; k < M; ++k) {
      ac[k] = a[k].data();
      ai[k] = ac[k][i];
    }
    for (int k = 0; k <= M; ++k) {
      bc[k] = b[k].data();
      bi[k] = bc[k][i];
    }
    double s0 = 0.0;
    double s1 = 0.0;
#pragma omp simd reduction(+ : s0, s1)
    for (std::int64_t j = i + 1; j < nt; ++j) {
      double dm = std::fabs(ac[0][j] - ai[0]);
      for (int k = 1; k < M; ++k) dm = std::fmax(dm, std::fabs(ac[k][j] - ai[k]));
      double dm1 = std::fabs(bc[0][j] - bi[0]);
      for (int k = 1; k <= M; ++k) dm1 = std::fmax(dm1, std::fabs(bc[k][j] - bi[k]));
      s0 += std::exp(-power<P>(dm) * scale);
      s1 += std::exp(-power<P>(dm1) * scale);
    }
    row_m[static_cast<std::size_t>(i)] = s0;
    row_m1[static_cast<std::size_t>(i)] = s1;
  }
  FuzzySums out;
  for (std::int64_t i = 0; i < nt; ++i) {
    out.phi_m += row_m[static_cast<std::size_t>(i)];
    out.phi_m1 += row_m1[static_cast<std::size_t>(i)];
  }
  return out;
}

FuzzySums sums_generic(std::span<const double> x, int m, int p, double scale) {
  const auto nt = static_cast<std::int64_t>(x.size()) - m;
  const auto a = centred_templates(x, m, nt);
  const auto b = centred_templates(x, m + 1, nt);
  std::vector<double> row_m(static_cast<std::size_t>(nt), 0.0);
  std::vector<double> row_m1(static_cast<std::size_t>(nt), 0.0);
#pragma omp parallel for schedule(dynamic, 32)
  for (std::int64_t i = 0; i < nt; ++i) {
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::int64_t j = i + 1; j < nt; ++j) {
      double dm = 0.0;
      for (int k = 0; k < m; ++k) dm = std::fmax(dm, std::fabs(a[k][j] - a[k][i]));
      double dm1 = 0.0;
      for (int k = 0; k <= m; ++k) dm1 = std::fmax(dm1, std::fabs(b[k][j] - b[k][i]));
      s0 += std::exp(-std::pow(dm, p) * scale);
      s1 += std::exp(-std::pow(dm1, p) * scale);
    }
    row_m[static_cast<std::size_t>(i)] = s0;
    row_m1[static_cast<std::size_t>(i)] = s1;
  }
  FuzzySums out;
  for (std::int64_t i = 0; i < nt; ++i) {
    out.phi_m += row_m[static_cast<std::size_t>(i)];
    out.phi_m1 += row_m1[static_cast<std::size_t>(i)];
  }
  return out;
}

}  // namespace

FuzzySums fuzzy_entropy_sums(std::span<const double> x, int m, int power, double scale) {
  if (power == 2) {
    switch (m) {
      case 1: return sums_fixed<1, 2>(x, scale);
      case 2: return sums_fixed<2, 2>(x, scale);
      case 3: return sums_fixed<3, 2>(x, scale);
      default: break;
    }
  } else if (power == 1) {
    if (m == 2) return sums_fixed<2, 1>(x, scale);
  } else if (power == 3) {
    if (m == 2) return sums_fixed<2, 3>(x, scale);
  }
  return sums_generic(x, m, power, scale);
}

}  // namespace physio::features::kernel
