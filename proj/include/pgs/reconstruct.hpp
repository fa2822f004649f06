#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pgs/errors.hpp"
#include "pgs/sampler.hpp"

namespace pgs {

inline constexpr double kPinvCutoffRatio = 1e-10;

/// Observed sub-block Y of a product signal: Y(a, b) = X(set2[a], set1[b]).
struct SampledObservation {
  Eigen::MatrixXd y;  // |set2| x |set1|
  SamplingDesign design;
};

inline SampledObservation sample(const ProductSignal& x,
                                 const SamplingDesign& design) {
  for (int v : design.set1) {
    if (v < 0 || v >= x.n1()) {
      throw std::invalid_argument("sample: factor-1 index out of range");
    }
  }
  for (int v : design.set2) {
    if (v < 0 || v >= x.n2()) {
      throw std::invalid_argument("sample: factor-2 index out of range");
    }
  }
  SampledObservation obs;
  obs.design = design;
  obs.y.resize(Eigen::Index(design.set2.size()), Eigen::Index(design.set1.size()));
  for (std::size_t a = 0; a < design.set2.size(); ++a) {
    for (std::size_t b = 0; b < design.set1.size(); ++b) {
      obs.y(Eigen::Index(a), Eigen::Index(b)) =
          x.values(design.set2[a], design.set1[b]);
    }
  }
  return obs;
}

/// Left pseudo-inverse of a tall full-column-rank matrix via SVD. Singular
/// values at or below cutoff_ratio * sigma_max count as zero; a deficient
/// matrix raises SingularSystemError naming `factor_display` (1 or 2).
inline Eigen::MatrixXd left_pseudo_inverse(const Eigen::MatrixXd& a,
                                           double cutoff_ratio,
                                           int factor_display) {
  if (a.rows() < a.cols() || a.cols() == 0) {
    throw SingularSystemError(
        factor_display, "sampled basis has fewer rows than columns (" +
                            std::to_string(a.rows()) + " x " +
                            std::to_string(a.cols()) + ")");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv(0);
  if (!(sv(sv.size() - 1) > cutoff_ratio * smax)) {
    throw SingularSystemError(
        factor_display,
        "sampled basis is rank deficient (sigma_min/sigma_max = " +
            std::to_string(smax > 0.0 ? sv(sv.size() - 1) / smax : 0.0) + ")");
  }
  return svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

/// Least-squares coefficients from the sampled block, computed per factor:
/// coeffs = pinv(Phi2 u2) * Y * pinv(Phi1 u1)^T. The Kronecker system is
/// never materialized.
inline Eigen::MatrixXd estimate_coefficients(const SampledObservation& obs,
                                             const ProductModel& model,
                                             double cutoff_ratio = kPinvCutoffRatio) {
  const Eigen::MatrixXd a1 = select_rows(model.basis1.u, obs.design.set1);
  const Eigen::MatrixXd a2 = select_rows(model.basis2.u, obs.design.set2);
  if (obs.y.rows() != a2.rows() || obs.y.cols() != a1.rows()) {
    throw std::invalid_argument(
        "estimate_coefficients: observation shape does not match the design");
  }
  const Eigen::MatrixXd p1 = left_pseudo_inverse(a1, cutoff_ratio, 1);
  const Eigen::MatrixXd p2 = left_pseudo_inverse(a2, cutoff_ratio, 2);
  return p2 * obs.y * p1.transpose();
}

/// Back to vertex domain; alias of synthesize, listed for pipeline
/// completeness.
inline ProductSignal reconstruct_signal(const Eigen::MatrixXd& coeffs,
                                        const ProductModel& model) {
  return synthesize(model, coeffs);
}

/// Per-factor Fisher information T_i = (Phi_i u_i)^T (Phi_i u_i). The full
/// information matrix is their Kronecker product.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> fisher_information(
    const ProductModel& model, const SamplingDesign& design) {
  auto info = [](const ReducedBasis& basis, const std::vector<int>& set) {
    const Eigen::MatrixXd a = select_rows(basis.u, set);
    Eigen::MatrixXd t = a.transpose() * a;
    if (t.size() == 0) t = Eigen::MatrixXd::Zero(basis.k(), basis.k());
    t = 0.5 * (t + t.transpose()).eval();
    return t;
  };
  return {info(model.basis1, design.set1), info(model.basis2, design.set2)};
}

inline double relative_error(const ProductSignal& estimate,
                             const ProductSignal& reference) {
  if (estimate.n1() != reference.n1() || estimate.n2() != reference.n2()) {
    throw std::invalid_argument("relative_error: shape mismatch");
  }
  const double denom = reference.values.norm();
  if (denom == 0.0) {
    throw std::domain_error("relative_error: reference signal has zero norm");
  }
  return (estimate.values - reference.values).norm() / denom;
}

/// Multi-channel variant over the concatenation of all channels.
inline double relative_error(const std::vector<ProductSignal>& estimate,
                             const std::vector<ProductSignal>& reference) {
  if (estimate.size() != reference.size() || reference.empty()) {
    throw std::invalid_argument("relative_error: channel count mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < reference.size(); ++c) {
    if (estimate[c].n1() != reference[c].n1() ||
        estimate[c].n2() != reference[c].n2()) {
      throw std::invalid_argument("relative_error: shape mismatch");
    }
    num += (estimate[c].values - reference[c].values).squaredNorm();
    den += reference[c].values.squaredNorm();
  }
  if (den == 0.0) {
    throw std::domain_error("relative_error: reference signal has zero norm");
  }
  return std::sqrt(num / den);
}

/// Matrix-convention mask entry: row indexes factor 2, col indexes factor 1.
struct MaskedEntry {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

inline double masked_rmse(const ProductSignal& estimate,
                          const std::vector<MaskedEntry>& mask) {
  if (mask.empty()) {
    throw std::domain_error("masked_rmse: empty mask");
  }
  double sum = 0.0;
  for (const auto& e : mask) {
    if (e.row < 0 || e.row >= estimate.n2() || e.col < 0 || e.col >= estimate.n1()) {
      throw std::invalid_argument("masked_rmse: mask entry out of range");
    }
    const double r = estimate.values(e.row, e.col) - e.value;
    sum += r * r;
  }
  return std::sqrt(sum / double(mask.size()));
}

}  // namespace pgs
