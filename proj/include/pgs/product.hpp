#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgs/graph.hpp"
#include "pgs/spectral.hpp"

namespace pgs {

enum class ProductKind { cartesian, kronecker, strong };

/// Signal on a two-factor product graph, stored in matrix form: N2 rows
/// (factor-2 vertices) by N1 columns (factor-1 vertices). The pinned
/// vectorization convention is column stacking: vector index i + j*N2
/// corresponds to entry (i, j).
struct ProductSignal {
  Eigen::MatrixXd values;

  int n1() const { return int(values.cols()); }
  int n2() const { return int(values.rows()); }
};

/// The reduced Kronecker-structured spectral model: K1 retained columns for
/// factor 1 and K2 for factor 2. Model dimension is K1*K2.
struct ProductModel {
  ReducedBasis basis1;
  ReducedBasis basis2;

  int n1() const { return basis1.n(); }
  int n2() const { return basis2.n(); }
  int k1() const { return basis1.k(); }
  int k2() const { return basis2.k(); }
};

inline Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Dense adjacency of the product graph. Materializes an N1*N2 matrix, so it
/// is meant for small factors (tests, inspection); production paths stay
/// factored.
inline ShiftOperator product_adjacency(const Graph& g1, const Graph& g2,
                                       ProductKind kind) {
  const Eigen::MatrixXd a1 = adjacency(g1).values;
  const Eigen::MatrixXd a2 = adjacency(g2).values;
  const Eigen::MatrixXd i1 = Eigen::MatrixXd::Identity(g1.n, g1.n);
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(g2.n, g2.n);
  Eigen::MatrixXd s;
  switch (kind) {
    case ProductKind::cartesian:
      s = kron(a1, i2) + kron(i1, a2);
      break;
    case ProductKind::kronecker:
      s = kron(a1, a2);
      break;
    case ProductKind::strong:
      s = kron(a1, i2) + kron(i1, a2) + kron(a1, a2);
      break;
  }
  return {g1.n * g2.n, std::move(s), ShiftKind::adjacency};
}

/// Eigenvalue combination rules, emitted in the Kronecker column order of
/// U1 (x) U2: output index j*N2 + i pairs factor-1 eigenvalue j with
/// factor-2 eigenvalue i.
inline Eigen::VectorXd product_eigenvalues_from(const Eigen::VectorXd& l1,
                                                const Eigen::VectorXd& l2,
                                                ProductKind kind) {
  const Eigen::Index n1 = l1.size(), n2 = l2.size();
  Eigen::VectorXd out(n1 * n2);
  for (Eigen::Index j = 0; j < n1; ++j) {
    for (Eigen::Index i = 0; i < n2; ++i) {
      double v = 0.0;
      switch (kind) {
        case ProductKind::cartesian:
          v = l1[j] + l2[i];
          break;
        case ProductKind::kronecker:
          v = l1[j] * l2[i];
          break;
        case ProductKind::strong:
          v = l1[j] + l2[i] + l1[j] * l2[i];
          break;
      }
      out[j * n2 + i] = v;
    }
  }
  return out;
}

/// Restricted to adjacency-ordered bases: the combination rules above are
/// valid for adjacency decompositions of the factors, and silently wrong
/// spectra for Laplacian inputs are worse than an error.
inline Eigen::VectorXd product_eigenvalues(const SpectralBasis& basis1,
                                           const SpectralBasis& basis2,
                                           ProductKind kind) {
  if (basis1.ordering != FrequencyOrdering::adjacency_descending ||
      basis2.ordering != FrequencyOrdering::adjacency_descending) {
    throw std::invalid_argument(
        "product_eigenvalues: factor bases must come from adjacency shift operators");
  }
  return product_eigenvalues_from(basis1.eigenvalues, basis2.eigenvalues, kind);
}

/// Column stacking: x[i + j*N2] = X(i, j).
inline Eigen::VectorXd vectorize(const ProductSignal& ps) {
  return Eigen::Map<const Eigen::VectorXd>(ps.values.data(), ps.values.size());
}

inline ProductSignal matricize(const Eigen::VectorXd& x, int n1, int n2) {
  if (n1 < 1 || n2 < 1 || x.size() != Eigen::Index(n1) * Eigen::Index(n2)) {
    throw std::invalid_argument("matricize: vector length does not equal n1*n2");
  }
  ProductSignal ps;
  ps.values = Eigen::Map<const Eigen::MatrixXd>(x.data(), n2, n1);
  return ps;
}

/// X = u2 * coeffs * u1^T for a K2 x K1 coefficient matrix.
inline ProductSignal synthesize(const ProductModel& model,
                                const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() != model.k2() || coeffs.cols() != model.k1()) {
    throw std::invalid_argument("synthesize: coefficient shape must be K2 x K1");
  }
  ProductSignal ps;
  ps.values = model.basis2.u * coeffs * model.basis1.u.transpose();
  return ps;
}

/// Spectral coefficients u2^T X u1. Inverts synthesize when the supports are
/// full or X is bandlimited to them.
inline Eigen::MatrixXd analyze(const ProductModel& model, const ProductSignal& x) {
  if (x.n1() != model.n1() || x.n2() != model.n2()) {
    throw std::invalid_argument("analyze: signal dimensions do not match the model");
  }
  return model.basis2.u.transpose() * x.values * model.basis1.u;
}

}  // namespace pgs
