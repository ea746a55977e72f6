#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace irtmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

inline double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_symmetric(const MatrixXd& m, double rel_tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline MatrixXd symmetrized(const MatrixXd& m) {
  return 0.5 * (m + m.transpose());
}

inline double min_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(sym),
                                              Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrized(sym),
                                              Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

inline bool is_positive_definite(const MatrixXd& m, double rel_tol = 1e-9) {
  return is_symmetric(m, rel_tol) && min_eigenvalue(m) > 0.0;
}

inline MatrixXd matrix_power(const MatrixXd& m, int k) {
  MatrixXd r = MatrixXd::Identity(m.rows(), m.cols());
  for (int i = 0; i < k; ++i) r = r * m;
  return r;
}

// splitmix64 finalizer; used to derive independent seeds from tuples.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c = 0) {
  return mix64(mix64(mix64(a) ^ b) ^ c);
}

/// mt19937_64 with hand-rolled conversions so that streams are identical
/// across standard libraries (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached second value).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  VectorXd normal_vector(int n) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  MatrixXd normal_matrix(int rows, int cols) {
    MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  int uniform_int(int lo, int hi) {  // inclusive
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace irtmpc
