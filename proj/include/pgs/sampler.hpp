#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgs/product.hpp"
#include "pgs/random.hpp"

namespace pgs {

inline constexpr double kIdentifiabilityRatio = 1e-8;

/// Sampling budgets: |set1| >= k1, |set2| >= k2, |set1| + |set2| = l.
struct Budgets {
  int k1 = 0;
  int k2 = 0;
  int l = 0;
};

inline void validate(const Budgets& b, int n1, int n2) {
  if (b.k1 < 1 || b.k1 > n1 || b.k2 < 1 || b.k2 > n2) {
    throw std::invalid_argument("budgets: need 1 <= K_i <= N_i");
  }
  if (b.l < b.k1 + b.k2 || b.l > n1 + n2) {
    throw std::invalid_argument("budgets: need K1 + K2 <= L <= N1 + N2");
  }
}

/// Per-factor selected vertex sets (sorted ascending, 0-based) together with
/// the budgets they were designed for.
struct SamplingDesign {
  std::vector<int> set1;
  std::vector<int> set2;
  Budgets budgets;
};

inline void validate(const SamplingDesign& d, int n1, int n2) {
  validate(d.budgets, n1, n2);
  auto check_set = [](const std::vector<int>& s, int n, const char* name) {
    int prev = -1;
    for (int v : s) {
      if (v <= prev || v >= n) {
        throw std::invalid_argument(std::string("sampling design: ") + name +
                                    " must be sorted, unique and in range");
      }
      prev = v;
    }
  };
  check_set(d.set1, n1, "set1");
  check_set(d.set2, n2, "set2");
  if (int(d.set1.size()) < d.budgets.k1 || int(d.set2.size()) < d.budgets.k2 ||
      int(d.set1.size() + d.set2.size()) != d.budgets.l) {
    throw std::invalid_argument(
        "sampling design: set sizes violate the budgets (|set_i| >= K_i, total = L)");
  }
}

inline std::vector<int> all_vertices(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

inline std::vector<int> complement_of(int n, const std::vector<int>& s) {
  std::vector<char> in(n, 0);
  for (int v : s) {
    if (v < 0 || v >= n) throw std::invalid_argument("complement_of: index out of range");
    in[v] = 1;
  }
  std::vector<int> out;
  out.reserve(n - s.size());
  for (int v = 0; v < n; ++v) {
    if (!in[v]) out.push_back(v);
  }
  return out;
}

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m,
                                   const std::vector<int>& rows) {
  Eigen::MatrixXd out(Eigen::Index(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= m.rows()) {
      throw std::invalid_argument("select_rows: index out of range");
    }
    out.row(Eigen::Index(r)) = m.row(rows[r]);
  }
  return out;
}

/// Per-factor frame potential F_i(sel) = sum_{m,n in sel} G(m,n)^2 with G the
/// cached row Gram u u^T; equals tr{T^H T} for T = (Phi u)^T (Phi u).
inline double frame_potential(const ReducedBasis& basis,
                              const std::vector<int>& selected) {
  std::vector<int> sel = selected;
  std::sort(sel.begin(), sel.end());
  if (std::adjacent_find(sel.begin(), sel.end()) != sel.end()) {
    throw std::invalid_argument("frame_potential: repeated vertex in selection");
  }
  if (!sel.empty() && (sel.front() < 0 || sel.back() >= basis.n())) {
    throw std::invalid_argument("frame_potential: vertex out of range");
  }
  double fp = 0.0;
  for (int a : sel) {
    for (int b : sel) {
      const double g = basis.row_gram(a, b);
      fp += g * g;
    }
  }
  return fp;
}

/// F(design) = F1(set1) * F2(set2); the product-graph frame potential
/// factorizes across the two domains.
inline double product_frame_potential(const ProductModel& model,
                                      const SamplingDesign& design) {
  return frame_potential(model.basis1, design.set1) *
         frame_potential(model.basis2, design.set2);
}

/// Submodular surrogate over removal sets:
/// G(S) = F1(V1) F2(V2) - F1(V1\S1) F2(V2\S2).
inline double surrogate_value(const ProductModel& model,
                              const std::vector<int>& removed1,
                              const std::vector<int>& removed2) {
  const double full1 = frame_potential(model.basis1, all_vertices(model.n1()));
  const double full2 = frame_potential(model.basis2, all_vertices(model.n2()));
  const double fbar1 =
      frame_potential(model.basis1, complement_of(model.n1(), removed1));
  const double fbar2 =
      frame_potential(model.basis2, complement_of(model.n2(), removed2));
  return full1 * full2 - fbar1 * fbar2;
}

/// Incremental greedy-removal state. Per factor it maintains the
/// complementary frame potential fbar_i = F_i(V_i \ S_i) and the running
/// sums c_x = sum_{n in current selection} G(x,n)^2, so the decrement of
/// removing x is delta(x) = 2 c_x - G(x,x)^2 and the surrogate gain is
/// delta(x) * fbar_other. One removal updates the sums with a single squared
/// Gram column subtraction.
class RemovalState {
 public:
  RemovalState(const ProductModel& model, const Budgets& budgets)
      : model_(&model), budgets_(budgets) {
    validate(budgets, model.n1(), model.n2());
    total_cap_ = model.n1() + model.n2() - budgets.l;
    caps_ = {model.n1() - budgets.k1, model.n2() - budgets.k2};
    for (int f = 0; f < 2; ++f) {
      const Eigen::MatrixXd& g = basis(f).row_gram;
      sq_gram_[f] = g.cwiseAbs2();
      csum_[f] = sq_gram_[f].rowwise().sum();
      fbar_[f] = sq_gram_[f].sum();
      removed_[f].assign(n(f), 0);
    }
  }

  const ProductModel& model() const { return *model_; }
  const Budgets& budgets() const { return budgets_; }
  const ReducedBasis& basis(int factor) const {
    return factor == 0 ? model_->basis1 : model_->basis2;
  }

  int n(int factor) const { return factor == 0 ? model_->n1() : model_->n2(); }
  int cap(int factor) const { return caps_[std::size_t(factor)]; }
  int removed_count(int factor) const { return removed_count_[std::size_t(factor)]; }
  int total_removed() const { return removed_count_[0] + removed_count_[1]; }
  int total_cap() const { return total_cap_; }
  bool removed(int factor, int vertex) const {
    return removed_[std::size_t(factor)][std::size_t(vertex)] != 0;
  }

  double fbar(int factor) const { return fbar_[std::size_t(factor)]; }

  /// Decrement of fbar(factor) if `vertex` were removed now.
  double delta(int factor, int vertex) const {
    const auto f = std::size_t(factor);
    return 2.0 * csum_[f][vertex] - sq_gram_[f](vertex, vertex);
  }

  /// Surrogate gain of removing `vertex` from `factor`.
  double gain(int factor, int vertex) const {
    return delta(factor, vertex) * fbar_[std::size_t(1 - factor)];
  }

  void remove(int factor, int vertex) {
    const auto f = std::size_t(factor);
    if (vertex < 0 || vertex >= n(factor)) {
      throw std::invalid_argument("RemovalState::remove: vertex out of range");
    }
    if (removed_[f][std::size_t(vertex)]) {
      throw std::invalid_argument("RemovalState::remove: vertex already removed");
    }
    if (removed_count_[f] >= caps_[f] || total_removed() >= total_cap_) {
      throw std::invalid_argument(
          "RemovalState::remove: removal violates the matroid constraints");
    }
    fbar_[f] -= delta(factor, vertex);
    csum_[f] -= sq_gram_[f].col(vertex);
    removed_[f][std::size_t(vertex)] = 1;
    ++removed_count_[f];
  }

  /// From-scratch recomputation of fbar(factor); the incremental value must
  /// track it within 1e-8 at all times.
  double fbar_recomputed(int factor) const {
    return frame_potential(basis(factor), selection(factor));
  }

  /// Current selection V_f \ S_f, sorted.
  std::vector<int> selection(int factor) const {
    std::vector<int> out;
    out.reserve(n(factor) - removed_count(factor));
    for (int v = 0; v < n(factor); ++v) {
      if (!removed(factor, v)) out.push_back(v);
    }
    return out;
  }

  std::vector<int> removed_set(int factor) const {
    std::vector<int> out;
    out.reserve(removed_count(factor));
    for (int v = 0; v < n(factor); ++v) {
      if (removed(factor, v)) out.push_back(v);
    }
    return out;
  }

 private:
  const ProductModel* model_;
  Budgets budgets_;
  int total_cap_ = 0;
  std::array<int, 2> caps_{0, 0};
  std::array<Eigen::MatrixXd, 2> sq_gram_;
  std::array<Eigen::VectorXd, 2> csum_;
  std::array<std::vector<char>, 2> removed_;
  std::array<int, 2> removed_count_{0, 0};
  std::array<double, 2> fbar_{0.0, 0.0};
};

/// Surrogate gain of removing `vertex` (0-based factor id). Matches the
/// from-scratch difference surrogate_value(S u {x}) - surrogate_value(S).
inline double marginal_gain(const RemovalState& state, int factor, int vertex) {
  if (factor != 0 && factor != 1) {
    throw std::invalid_argument("marginal_gain: factor must be 0 or 1");
  }
  if (vertex < 0 || vertex >= state.n(factor)) {
    throw std::invalid_argument("marginal_gain: vertex out of range");
  }
  if (state.removed(factor, vertex)) {
    throw std::invalid_argument("marginal_gain: candidate already removed");
  }
  return state.gain(factor, vertex);
}

/// Matroid-constrained greedy over removal sets: N - L iterations, each
/// removing the feasible candidate with maximum surrogate gain. Ties go to
/// the lower factor id, then the lower vertex index, which also fills
/// zero-gain plateaus deterministically so that |set1| + |set2| = L exactly.
inline SamplingDesign greedy_design(const ProductModel& model, const Budgets& budgets) {
  validate(budgets, model.n1(), model.n2());
  RemovalState state(model, budgets);
  const int removals = model.n1() + model.n2() - budgets.l;
  for (int it = 0; it < removals; ++it) {
    int best_factor = -1, best_vertex = -1;
    double best_gain = 0.0;
    bool found = false;
    for (int f = 0; f < 2; ++f) {
      if (state.removed_count(f) >= state.cap(f)) continue;
      for (int x = 0; x < state.n(f); ++x) {
        if (state.removed(f, x)) continue;
        const double g = state.gain(f, x);
        if (!found || g > best_gain) {
          found = true;
          best_gain = g;
          best_factor = f;
          best_vertex = x;
        }
      }
    }
    if (!found) {
      throw std::logic_error("greedy_design: no feasible candidate (unreachable)");
    }
    state.remove(best_factor, best_vertex);
  }
  SamplingDesign design{state.selection(0), state.selection(1), budgets};
  validate(design, model.n1(), model.n2());
  return design;
}

struct BruteForceResult {
  SamplingDesign design;
  double value = 0.0;
  std::uint64_t sets_enumerated = 0;
};

/// Exhaustive maximization of the surrogate over the truncated partition
/// matroid. G is monotone, so only removal sets of maximal size N - L are
/// enumerated. Refuses searches beyond `max_sets` feasible sets.
inline BruteForceResult brute_force_search(const ProductModel& model,
                                           const Budgets& budgets,
                                           std::uint64_t max_sets = 1000000) {
  const int n1 = model.n1(), n2 = model.n2();
  validate(budgets, n1, n2);
  const int removals = n1 + n2 - budgets.l;
  const int cap1 = n1 - budgets.k1, cap2 = n2 - budgets.k2;
  const int lo = std::max(0, removals - cap2);
  const int hi = std::min(cap1, removals);

  auto binom = [](int n, int k) -> double {
    if (k < 0 || k > n) return 0.0;
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v *= double(n - k + i) / double(i);
    return v;
  };
  double planned = 0.0;
  for (int s1 = lo; s1 <= hi; ++s1) {
    planned += binom(n1, s1) * binom(n2, removals - s1);
  }
  if (planned > double(max_sets)) {
    throw std::length_error("brute_force_design: " + std::to_string(std::uint64_t(planned)) +
                            " feasible removal sets exceed the guard of " +
                            std::to_string(max_sets));
  }

  const double full1 = frame_potential(model.basis1, all_vertices(n1));
  const double full2 = frame_potential(model.basis2, all_vertices(n2));
  const double full_product = full1 * full2;

  auto for_each_combination = [](int n, int k, auto&& visit) {
    if (k > n) return;
    std::vector<int> c(k);
    std::iota(c.begin(), c.end(), 0);
    while (true) {
      visit(c);
      int i = k - 1;
      while (i >= 0 && c[i] == n - k + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
  };

  BruteForceResult result;
  bool have_best = false;
  for (int s1 = lo; s1 <= hi; ++s1) {
    const int s2 = removals - s1;
    for_each_combination(n1, s1, [&](const std::vector<int>& rem1) {
      const double fbar1 = frame_potential(model.basis1, complement_of(n1, rem1));
      for_each_combination(n2, s2, [&](const std::vector<int>& rem2) {
        const double fbar2 = frame_potential(model.basis2, complement_of(n2, rem2));
        const double value = full_product - fbar1 * fbar2;
        ++result.sets_enumerated;
        if (!have_best || value > result.value) {
          have_best = true;
          result.value = value;
          result.design = SamplingDesign{complement_of(n1, rem1),
                                         complement_of(n2, rem2), budgets};
        }
      });
    });
  }
  validate(result.design, n1, n2);
  return result;
}

inline SamplingDesign brute_force_design(const ProductModel& model,
                                         const Budgets& budgets,
                                         std::uint64_t max_sets = 1000000) {
  return brute_force_search(model, budgets, max_sets).design;
}

/// Uniform feasible design: |set1| drawn uniformly from its feasible range,
/// then uniform subsets of each factor. Seeded and reproducible.
inline SamplingDesign random_design(int n1, int n2, const Budgets& budgets,
                                    std::uint64_t seed) {
  validate(budgets, n1, n2);
  std::mt19937_64 eng(seed);
  const int lo = std::max(budgets.k1, budgets.l - n2);
  const int hi = std::min(n1, budgets.l - budgets.k2);
  const int l1 = lo + int(uniform_index(eng, std::uint64_t(hi - lo + 1)));
  SamplingDesign d;
  d.set1 = sample_without_replacement(eng, n1, l1);
  d.set2 = sample_without_replacement(eng, n2, budgets.l - l1);
  d.budgets = budgets;
  validate(d, n1, n2);
  return d;
}

struct IdentifiabilityReport {
  bool identifiable = false;
  // index 0 = factor 1, index 1 = factor 2
  std::array<double, 2> sigma_min{0.0, 0.0};
  std::array<double, 2> sigma_max{0.0, 0.0};
  std::array<double, 2> cond{std::numeric_limits<double>::infinity(),
                             std::numeric_limits<double>::infinity()};
};

/// A design is identifiable when both sampled bases Phi_i u_i have smallest
/// singular value above `ratio` times the largest; then the least-squares
/// estimate is unique.
inline IdentifiabilityReport check_identifiability(
    const ProductModel& model, const SamplingDesign& design,
    double ratio = kIdentifiabilityRatio) {
  IdentifiabilityReport report;
  report.identifiable = true;
  for (int f = 0; f < 2; ++f) {
    const ReducedBasis& basis = f == 0 ? model.basis1 : model.basis2;
    const std::vector<int>& set = f == 0 ? design.set1 : design.set2;
    const auto fi = std::size_t(f);
    if (set.empty()) {
      report.identifiable = false;
      continue;
    }
    const Eigen::MatrixXd a = select_rows(basis.u, set);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& sv = svd.singularValues();
    report.sigma_max[fi] = sv(0);
    report.sigma_min[fi] = a.rows() < a.cols() ? 0.0 : sv(sv.size() - 1);
    if (report.sigma_min[fi] > 0.0) {
      report.cond[fi] = report.sigma_max[fi] / report.sigma_min[fi];
    }
    if (!(report.sigma_min[fi] > ratio * report.sigma_max[fi])) {
      report.identifiable = false;
    }
  }
  return report;
}

}  // namespace pgs
