#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgs/graph.hpp"

namespace pgs {

inline constexpr double kOrthonormalityTol = 1e-8;
inline constexpr double kEnergyPrefixSlack = 1e-12;

enum class FrequencyOrdering { laplacian_ascending, adjacency_descending };

/// Full eigendecomposition of a shift operator, frequency-ordered:
/// ascending eigenvalues for a Laplacian, descending for an adjacency.
struct SpectralBasis {
  int n = 0;
  Eigen::MatrixXd eigenvectors;  // columns u_0..u_{n-1} in frequency order
  Eigen::VectorXd eigenvalues;
  FrequencyOrdering ordering = FrequencyOrdering::laplacian_ascending;
};

/// Strictly increasing 0-based positions into a basis ordering.
struct FrequencySupport {
  std::vector<int> indices;

  int k() const { return int(indices.size()); }
};

inline void validate(const FrequencySupport& s, int n) {
  if (s.indices.empty() || int(s.indices.size()) > n) {
    throw std::invalid_argument("frequency support: need 1 <= K <= n");
  }
  int prev = -1;
  for (int idx : s.indices) {
    if (idx <= prev || idx >= n) {
      throw std::invalid_argument(
          "frequency support: indices must be strictly increasing and in range");
    }
    prev = idx;
  }
}

/// The retained eigenvector columns of one factor plus the cached row Gram
/// matrix G = u u^T that the sampler's frame-potential machinery runs on.
struct ReducedBasis {
  Eigen::MatrixXd u;  // n x K
  FrequencySupport support;
  Eigen::MatrixXd row_gram;  // n x n

  int n() const { return int(u.rows()); }
  int k() const { return int(u.cols()); }
};

inline void validate(const ReducedBasis& b) {
  const int k = b.k();
  if (k < 1 || b.n() < k) {
    throw std::invalid_argument("reduced basis: need 1 <= K <= n");
  }
  const double ortho =
      (b.u.transpose() * b.u - Eigen::MatrixXd::Identity(k, k)).norm();
  if (ortho > kOrthonormalityTol) {
    throw std::invalid_argument("reduced basis: columns are not orthonormal");
  }
  if ((b.row_gram - b.row_gram.transpose()).cwiseAbs().maxCoeff() > kOrthonormalityTol ||
      std::abs(b.row_gram.trace() - double(k)) > kOrthonormalityTol) {
    throw std::invalid_argument("reduced basis: row Gram is inconsistent");
  }
}

/// Flip each column so that its largest-magnitude entry (lowest index on
/// ties) is positive. Makes downstream results reproducible across runs.
inline void normalize_signs(Eigen::MatrixXd& u) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    Eigen::Index best = 0;
    double mag = std::abs(u(0, c));
    for (Eigen::Index r = 1; r < u.rows(); ++r) {
      const double m = std::abs(u(r, c));
      if (m > mag) {
        mag = m;
        best = r;
      }
    }
    if (u(best, c) < 0.0) u.col(c) = -u.col(c);
  }
}

inline SpectralBasis eigendecompose(const ShiftOperator& s) {
  if (s.n <= 0 || s.values.rows() != s.n || s.values.cols() != s.n) {
    throw std::invalid_argument("eigendecompose: dimension mismatch");
  }
  const double asym = (s.values - s.values.transpose()).cwiseAbs().maxCoeff();
  if (asym > kShiftSymmetryTol) {
    throw std::invalid_argument("eigendecompose: input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.values);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: eigensolver did not converge");
  }
  Eigen::MatrixXd u = solver.eigenvectors();
  Eigen::VectorXd ev = solver.eigenvalues();
  const FrequencyOrdering ordering = s.kind == ShiftKind::laplacian
                                         ? FrequencyOrdering::laplacian_ascending
                                         : FrequencyOrdering::adjacency_descending;
  if (ordering == FrequencyOrdering::adjacency_descending) {
    u = u.rowwise().reverse().eval();
    ev = ev.reverse().eval();
  }
  normalize_signs(u);
  return {s.n, std::move(u), std::move(ev), ordering};
}

/// The first k positions in the basis ordering.
inline FrequencySupport select_support_first_k(const SpectralBasis& basis, int k) {
  if (k < 1 || k > basis.n) {
    throw std::invalid_argument("select_support_first_k: need 1 <= k <= n");
  }
  FrequencySupport s;
  s.indices.resize(k);
  std::iota(s.indices.begin(), s.indices.end(), 0);
  return s;
}

namespace detail {

/// Smallest prefix pair (k1, k2) whose top-left block of `energy` holds at
/// least `fraction` of the total, scanning in increasing k1 + k2 and, within
/// a diagonal, increasing k1. Comparisons allow a 1e-12 relative slack so an
/// exactly bandlimited signal is not pushed past its true support by
/// round-off in the discarded entries.
inline std::pair<int, int> energy_prefix(const Eigen::MatrixXd& energy,
                                         double fraction) {
  const int n2 = int(energy.rows()), n1 = int(energy.cols());
  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(n2 + 1, n1 + 1);
  for (int i = 1; i <= n2; ++i) {
    for (int j = 1; j <= n1; ++j) {
      prefix(i, j) = energy(i - 1, j - 1) + prefix(i - 1, j) + prefix(i, j - 1) -
                     prefix(i - 1, j - 1);
    }
  }
  const double total = prefix(n2, n1);
  const double target = fraction * total - kEnergyPrefixSlack * total;
  for (int s = 2; s <= n1 + n2; ++s) {
    for (int k1 = std::max(1, s - n2); k1 <= std::min(n1, s - 1); ++k1) {
      const int k2 = s - k1;
      if (prefix(k2, k1) >= target) return {k1, k2};
    }
  }
  return {n1, n2};
}

}  // namespace detail

/// Joint prefix supports capturing at least `fraction` of the spectral
/// energy of X under the two bases. Returns (factor-1 support, factor-2
/// support).
inline std::pair<FrequencySupport, FrequencySupport> select_support_by_energy(
    const SpectralBasis& basis1, const SpectralBasis& basis2,
    const Eigen::MatrixXd& x, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("select_support_by_energy: fraction must be in (0, 1]");
  }
  if (x.rows() != basis2.n || x.cols() != basis1.n) {
    throw std::invalid_argument(
        "select_support_by_energy: signal dimensions do not match the bases");
  }
  const Eigen::MatrixXd xf =
      basis2.eigenvectors.transpose() * x * basis1.eigenvectors;
  const auto [k1, k2] = detail::energy_prefix(xf.cwiseAbs2(), fraction);
  return {select_support_first_k(basis1, k1), select_support_first_k(basis2, k2)};
}

/// Multi-channel variant: spectral energies are added across channels before
/// the prefix scan.
inline std::pair<FrequencySupport, FrequencySupport> select_support_by_energy(
    const SpectralBasis& basis1, const SpectralBasis& basis2,
    const std::vector<Eigen::MatrixXd>& channels, double fraction) {
  if (channels.empty()) {
    throw std::invalid_argument("select_support_by_energy: no channels");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("select_support_by_energy: fraction must be in (0, 1]");
  }
  Eigen::MatrixXd energy = Eigen::MatrixXd::Zero(basis2.n, basis1.n);
  for (const auto& x : channels) {
    if (x.rows() != basis2.n || x.cols() != basis1.n) {
      throw std::invalid_argument(
          "select_support_by_energy: signal dimensions do not match the bases");
    }
    const Eigen::MatrixXd xf =
        basis2.eigenvectors.transpose() * x * basis1.eigenvectors;
    energy += xf.cwiseAbs2();
  }
  const auto [k1, k2] = detail::energy_prefix(energy, fraction);
  return {select_support_first_k(basis1, k1), select_support_first_k(basis2, k2)};
}

/// Keep the support columns of the basis and cache the row Gram u u^T.
inline ReducedBasis reduce(const SpectralBasis& basis,
                           const FrequencySupport& support) {
  validate(support, basis.n);
  Eigen::MatrixXd u(basis.n, support.k());
  for (int c = 0; c < support.k(); ++c) {
    u.col(c) = basis.eigenvectors.col(support.indices[c]);
  }
  Eigen::MatrixXd gram = u * u.transpose();
  gram = 0.5 * (gram + gram.transpose()).eval();
  return {std::move(u), support, std::move(gram)};
}

}  // namespace pgs
