#pragma once

// Shared generators and independent oracles for the test suites. The oracles
// deliberately build the explicit matrices (selection matrices, Kronecker
// products, full SVD pseudo-inverses) that the library avoids, so they stay
// independent of the implementation paths they check.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pgs/pgs.hpp"

namespace th {

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("pgsamp_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name) const { return (path / name).string(); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(file(name));
    out << content;
  }
};

inline std::mt19937_64 engine(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& eng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = gauss(eng);
  }
  return m;
}

inline Eigen::MatrixXd random_orthonormal(int n, int k, std::mt19937_64& eng) {
  const Eigen::MatrixXd g = gaussian_matrix(n, k, eng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
}

inline pgs::ReducedBasis reduced_from(const Eigen::MatrixXd& u) {
  pgs::FrequencySupport support;
  support.indices.resize(std::size_t(u.cols()));
  std::iota(support.indices.begin(), support.indices.end(), 0);
  Eigen::MatrixXd gram = u * u.transpose();
  gram = 0.5 * (gram + gram.transpose()).eval();
  return pgs::ReducedBasis{u, support, gram};
}

inline pgs::ProductModel random_model(int n1, int k1, int n2, int k2,
                                      std::mt19937_64& eng) {
  return pgs::ProductModel{reduced_from(random_orthonormal(n1, k1, eng)),
                           reduced_from(random_orthonormal(n2, k2, eng))};
}

/// Connected random graph: a random spanning path plus extra edges, weights
/// uniform in [0.5, 1.5].
inline pgs::Graph random_connected_graph(int n, double extra_edge_prob,
                                         std::mt19937_64& eng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto order = std::vector<int>(std::size_t(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = int(pgs::uniform_index(eng, std::uint64_t(i + 1)));
    std::swap(order[std::size_t(i)], order[std::size_t(j)]);
  }
  pgs::Graph g{n, {}};
  auto add = [&](int a, int b) {
    g.edges.push_back({std::min(a, b), std::max(a, b), 0.5 + unit(eng)});
  };
  for (int i = 0; i + 1 < n; ++i) add(order[std::size_t(i)], order[std::size_t(i + 1)]);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (pgs::edge_weight(g, a, b) == 0.0 && unit(eng) < extra_edge_prob) add(a, b);
    }
  }
  pgs::validate(g);
  return g;
}

/// Model built from real graph Laplacians with first-k supports.
inline pgs::ProductModel graph_model(const pgs::Graph& g1, const pgs::Graph& g2,
                                     int k1, int k2) {
  const pgs::SpectralBasis b1 = pgs::eigendecompose(pgs::laplacian(g1));
  const pgs::SpectralBasis b2 = pgs::eigendecompose(pgs::laplacian(g2));
  return pgs::ProductModel{pgs::reduce(b1, pgs::select_support_first_k(b1, k1)),
                           pgs::reduce(b2, pgs::select_support_first_k(b2, k2))};
}

// --------------------------------------------------------------- oracles

inline Eigen::MatrixXd kron_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index ar = 0; ar < a.rows(); ++ar) {
    for (Eigen::Index ac = 0; ac < a.cols(); ++ac) {
      for (Eigen::Index br = 0; br < b.rows(); ++br) {
        for (Eigen::Index bc = 0; bc < b.cols(); ++bc) {
          out(ar * b.rows() + br, ac * b.cols() + bc) = a(ar, ac) * b(br, bc);
        }
      }
    }
  }
  return out;
}

inline Eigen::MatrixXd selection_matrix(int n, const std::vector<int>& rows) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(Eigen::Index(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r) phi(Eigen::Index(r), rows[r]) = 1.0;
  return phi;
}

/// Frame potential from the explicit selection matrix and Fisher matrix.
inline double frame_potential_oracle(const Eigen::MatrixXd& u,
                                     const std::vector<int>& selected) {
  const Eigen::MatrixXd phi = selection_matrix(int(u.rows()), selected);
  const Eigen::MatrixXd t = (phi * u).transpose() * (phi * u);
  return (t.transpose() * t).trace();
}

/// Moore-Penrose pseudo-inverse via full Jacobi SVD.
inline Eigen::MatrixXd pinv_oracle(const Eigen::MatrixXd& a, double rtol = 1e-12) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  const double cutoff = sv.size() > 0 ? rtol * sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

inline std::vector<int> bits_to_set(unsigned mask, int n) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (mask & (1u << i)) out.push_back(i);
  }
  return out;
}

inline std::vector<int> iota_set(int n) {
  auto v = std::vector<int>(std::size_t(n));
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace th
