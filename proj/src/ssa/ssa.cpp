#include "physio/ssa/ssa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "physio/error.hpp"

namespace physio::ssa {

void SsaConfig::validate() const {
  require(window_len >= 2, ErrorKind::kConfig, "SSA window_len must be >= 2");
  for (const auto& [channel, kept] : kept_components) {
    if (!kept) continue;
    require(*kept >= 1 && *kept <= window_len, ErrorKind::kConfig,
            "kept components for " + std::string(signal::channel_name(channel)) +
                " must lie in [1, window_len]");
  }
}

TrajectoryMatrix embed(const TimeSeries& ts, int window_len) {
  const auto n = static_cast<Eigen::Index>(ts.size());
  require(window_len >= 2 && window_len <= n, ErrorKind::kInvalidArgument,
          "window length " + std::to_string(window_len) + " outside [2, " + std::to_string(n) +
              "]");
  const Eigen::Index rows = window_len;
  const Eigen::Index cols = n - rows + 1;
  TrajectoryMatrix y(rows, cols);
  auto x = ts.values();
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) y(i, j) = x[static_cast<std::size_t>(i + j)];
  }
  return y;
}

TimeSeries diagonal_average(const Eigen::Ref<const Eigen::MatrixXd>& m, double sample_rate_hz) {
  require(m.rows() > 0 && m.cols() > 0, ErrorKind::kInvalidArgument, "empty matrix");
  const Eigen::Index len = m.rows() + m.cols() - 1;
  // Running mean, so an anti-diagonal of equal entries returns that entry exactly.
  std::vector<double> mean(static_cast<std::size_t>(len), 0.0);
  std::vector<double> count(static_cast<std::size_t>(len), 0.0);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto k = static_cast<std::size_t>(i + j);
      count[k] += 1.0;
      mean[k] += (m(i, j) - mean[k]) / count[k];
    }
  }
  return TimeSeries(std::move(mean), sample_rate_hz);
}

namespace {

// Anti-diagonal average of sigma * u v^T without forming the L x K matrix.
std::vector<double> averaged_rank_one(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                      double sigma) {
  const Eigen::Index rows = u.size();
  const Eigen::Index cols = v.size();
  const Eigen::Index n = rows + cols - 1;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, k - cols + 1);
    const Eigen::Index hi = std::min<Eigen::Index>(rows - 1, k);
    double s = 0.0;
    for (Eigen::Index i = lo; i <= hi; ++i) s += u(i) * v(k - i);
    out[static_cast<std::size_t>(k)] = sigma * s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

SsaDecomposition decompose(const TimeSeries& ts, int window_len) {
  const TrajectoryMatrix y = embed(ts, window_len);
  const Eigen::MatrixXd s = y * y.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) {
    fail(ErrorKind::kNumericalFailure, "eigendecomposition of the lag-covariance matrix failed");
  }
  // Eigen returns ascending eigenvalues; reverse for descending order.
  const Eigen::Index l = s.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(l));
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return eig.eigenvalues()(a) > eig.eigenvalues()(b);
  });

  SsaDecomposition out;
  out.window_len = window_len;
  out.singular_values.reserve(static_cast<std::size_t>(l));
  for (Eigen::Index idx : order) {
    out.singular_values.push_back(std::sqrt(std::max(0.0, eig.eigenvalues()(idx))));
  }
  const double lambda1 = std::max(0.0, eig.eigenvalues()(order.front()));
  int rank = 0;
  for (Eigen::Index idx : order) {
    if (eig.eigenvalues()(idx) > 1e-12 * lambda1 && lambda1 > 0.0) ++rank;
  }
  out.rank = rank;

  struct Triple {
    double sigma;
    std::vector<double> series;
    double energy;
  };
  std::vector<Triple> triples;
  triples.reserve(static_cast<std::size_t>(rank));
  for (int k = 0; k < rank; ++k) {
    const Eigen::Index idx = order[static_cast<std::size_t>(k)];
    const double sigma = out.singular_values[static_cast<std::size_t>(k)];
    const Eigen::VectorXd u = eig.eigenvectors().col(idx);
    const Eigen::VectorXd v = y.transpose() * u / sigma;
    std::vector<double> series = averaged_rank_one(u, v, sigma);
    double energy = 0.0;
    for (double val : series) energy += val * val;
    triples.push_back({sigma, std::move(series), energy});
  }
  // Equal singular values: keep solver order, then descending component energy.
  std::stable_sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
    if (a.sigma != b.sigma) return a.sigma > b.sigma;
    return a.energy > b.energy;
  });
  for (auto& t : triples) out.components.emplace_back(std::move(t.series), ts.sample_rate_hz());
  return out;
}

int hard_threshold_rank(const std::vector<double>& singular_values, int rows, int cols) {
  require(rows > 0 && cols > 0, ErrorKind::kInvalidArgument, "matrix shape must be positive");
  if (singular_values.empty()) return 0;
  const double beta =
      static_cast<double>(std::min(rows, cols)) / static_cast<double>(std::max(rows, cols));
  const double omega = 0.56 * beta * beta * beta - 0.95 * beta * beta + 1.82 * beta + 1.43;
  std::vector<double> sorted(singular_values);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median =
      n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double tau = omega * median;
  return static_cast<int>(std::count_if(singular_values.begin(), singular_values.end(),
                                        [tau](double s) { return s > tau; }));
}

TimeSeries reconstruct_selected(const SsaDecomposition& decomp, const std::set<int>& indices) {
  require(!decomp.components.empty(), ErrorKind::kInvalidArgument, "decomposition has no components");
  const std::size_t n = decomp.components.front().size();
  std::vector<double> out(n, 0.0);
  for (int idx : indices) {
    require(idx >= 1 && idx <= static_cast<int>(decomp.components.size()),
            ErrorKind::kInvalidArgument,
            "component index " + std::to_string(idx) + " outside [1, " +
                std::to_string(decomp.components.size()) + "]");
    auto c = decomp.components[static_cast<std::size_t>(idx - 1)].values();
    for (std::size_t i = 0; i < n; ++i) out[i] += c[i];
  }
  return TimeSeries(std::move(out), decomp.components.front().sample_rate_hz());
}

}  // namespace physio::ssa
