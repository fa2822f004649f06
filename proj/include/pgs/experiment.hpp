#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pgs/io.hpp"
#include "pgs/reconstruct.hpp"
#include "pgs/sampler.hpp"
#include "pgs/version.hpp"

namespace pgs {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration: a single declarative JSON document. See README for the full
// schema; config_from_json validates and config_to_json echoes it.
// ---------------------------------------------------------------------------

struct FactorSpec {
  std::string type;  // "cycle" | "knn" | "edges"
  int n = 0;         // cycle size, or declared vertex count for edge lists (0 = infer)
  std::string path;  // knn feature file or edge list
  int k = 0;         // knn neighbor count
  std::string metric = "euclidean";
  std::string schema = "numeric*";
};

struct SupportSpec {
  std::string type = "first_k";  // "first_k" | "energy"
  int k1 = 0;
  int k2 = 0;
  double fraction = 0.0;
};

struct DesignSpec {
  std::string method = "greedy";  // "greedy" | "random"
  std::uint64_t seed = 0;
  int trials = 1;
};

struct SignalSpec {
  std::string format;  // "pointcloud" | "ratings" | "matrix"
  std::string path;
  std::string fill = "mean";  // ratings only
};

struct EvaluationSpec {
  std::string metric = "relative_error";  // "relative_error" | "masked_rmse"
  std::string test_path;                  // masked_rmse only
};

struct ExperimentConfig {
  FactorSpec factor1;
  FactorSpec factor2;
  std::string shift = "laplacian";  // "laplacian" | "adjacency"
  SupportSpec support;
  int budget_l = 0;
  DesignSpec design;
  SignalSpec signal;
  EvaluationSpec evaluation;
  std::string output_dir;
  bool emit_plots = false;
  double identifiability_ratio = kIdentifiabilityRatio;
  double pinv_cutoff_ratio = kPinvCutoffRatio;
};

namespace detail {

inline const Json& require_key(const Json& j, const std::string& key,
                               const std::string& where) {
  if (!j.contains(key)) {
    throw std::invalid_argument("config: missing '" + key + "' in " + where);
  }
  return j.at(key);
}

inline FactorSpec factor_from_json(const Json& j, const std::string& where) {
  FactorSpec f;
  f.type = require_key(j, "type", where).get<std::string>();
  if (f.type == "cycle") {
    f.n = require_key(j, "n", where).get<int>();
  } else if (f.type == "knn") {
    f.path = require_key(j, "features", where).get<std::string>();
    f.k = require_key(j, "k", where).get<int>();
    f.metric = j.value("metric", "euclidean");
    f.schema = j.value("schema", "numeric*");
  } else if (f.type == "edges") {
    f.path = require_key(j, "path", where).get<std::string>();
    f.n = j.value("n", 0);
  } else {
    throw std::invalid_argument("config: unknown factor type '" + f.type + "' in " + where);
  }
  return f;
}

inline Json factor_to_json(const FactorSpec& f) {
  Json j;
  j["type"] = f.type;
  if (f.type == "cycle") {
    j["n"] = f.n;
  } else if (f.type == "knn") {
    j["features"] = f.path;
    j["k"] = f.k;
    j["metric"] = f.metric;
    j["schema"] = f.schema;
  } else {
    j["path"] = f.path;
    if (f.n > 0) j["n"] = f.n;
  }
  return j;
}

}  // namespace detail

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  cfg.factor1 = detail::factor_from_json(detail::require_key(j, "factor1", "config"), "factor1");
  cfg.factor2 = detail::factor_from_json(detail::require_key(j, "factor2", "config"), "factor2");
  cfg.shift = j.value("shift", "laplacian");
  if (cfg.shift != "laplacian" && cfg.shift != "adjacency") {
    throw std::invalid_argument("config: shift must be 'laplacian' or 'adjacency'");
  }

  const Json& sup = detail::require_key(j, "support", "config");
  cfg.support.type = sup.value("type", "first_k");
  if (cfg.support.type == "first_k") {
    cfg.support.k1 = detail::require_key(sup, "k1", "support").get<int>();
    cfg.support.k2 = detail::require_key(sup, "k2", "support").get<int>();
  } else if (cfg.support.type == "energy") {
    cfg.support.fraction = detail::require_key(sup, "fraction", "support").get<double>();
  } else {
    throw std::invalid_argument("config: support type must be 'first_k' or 'energy'");
  }

  cfg.budget_l = detail::require_key(detail::require_key(j, "budget", "config"), "l", "budget").get<int>();

  const Json& des = detail::require_key(j, "design", "config");
  cfg.design.method = des.value("method", "greedy");
  if (cfg.design.method == "random") {
    if (!des.contains("seed")) {
      throw std::invalid_argument("config: design method 'random' requires a seed");
    }
    cfg.design.seed = des.at("seed").get<std::uint64_t>();
    cfg.design.trials = des.value("trials", 1);
    if (cfg.design.trials < 1) {
      throw std::invalid_argument("config: design trials must be positive");
    }
  } else if (cfg.design.method != "greedy") {
    throw std::invalid_argument("config: design method must be 'greedy' or 'random'");
  }

  const Json& sig = detail::require_key(j, "signal", "config");
  cfg.signal.format = detail::require_key(sig, "format", "signal").get<std::string>();
  cfg.signal.path = detail::require_key(sig, "path", "signal").get<std::string>();
  cfg.signal.fill = sig.value("fill", "mean");
  if (cfg.signal.format != "pointcloud" && cfg.signal.format != "ratings" &&
      cfg.signal.format != "matrix") {
    throw std::invalid_argument("config: signal format must be pointcloud, ratings or matrix");
  }
  if (cfg.signal.fill != "mean" && cfg.signal.fill != "zero") {
    throw std::invalid_argument("config: signal fill must be 'mean' or 'zero'");
  }

  const Json& ev = detail::require_key(j, "evaluation", "config");
  cfg.evaluation.metric = detail::require_key(ev, "metric", "evaluation").get<std::string>();
  if (cfg.evaluation.metric == "masked_rmse") {
    cfg.evaluation.test_path = detail::require_key(ev, "test", "evaluation").get<std::string>();
  } else if (cfg.evaluation.metric != "relative_error") {
    throw std::invalid_argument("config: metric must be 'relative_error' or 'masked_rmse'");
  }

  cfg.output_dir = j.value("output_dir", "");
  cfg.emit_plots = j.value("emit_plots", false);
  if (j.contains("tolerances")) {
    const Json& tol = j.at("tolerances");
    cfg.identifiability_ratio = tol.value("identifiability_ratio", kIdentifiabilityRatio);
    cfg.pinv_cutoff_ratio = tol.value("pinv_cutoff_ratio", kPinvCutoffRatio);
  }
  return cfg;
}

inline Json config_to_json(const ExperimentConfig& cfg) {
  Json j;
  j["factor1"] = detail::factor_to_json(cfg.factor1);
  j["factor2"] = detail::factor_to_json(cfg.factor2);
  j["shift"] = cfg.shift;
  if (cfg.support.type == "first_k") {
    j["support"] = {{"type", "first_k"}, {"k1", cfg.support.k1}, {"k2", cfg.support.k2}};
  } else {
    j["support"] = {{"type", "energy"}, {"fraction", cfg.support.fraction}};
  }
  j["budget"] = {{"l", cfg.budget_l}};
  if (cfg.design.method == "random") {
    j["design"] = {{"method", "random"}, {"seed", cfg.design.seed}, {"trials", cfg.design.trials}};
  } else {
    j["design"] = {{"method", "greedy"}};
  }
  j["signal"] = {{"format", cfg.signal.format}, {"path", cfg.signal.path}};
  if (cfg.signal.format == "ratings") j["signal"]["fill"] = cfg.signal.fill;
  if (cfg.evaluation.metric == "masked_rmse") {
    j["evaluation"] = {{"metric", "masked_rmse"}, {"test", cfg.evaluation.test_path}};
  } else {
    j["evaluation"] = {{"metric", "relative_error"}};
  }
  j["output_dir"] = cfg.output_dir;
  j["emit_plots"] = cfg.emit_plots;
  j["tolerances"] = {{"identifiability_ratio", cfg.identifiability_ratio},
                     {"pinv_cutoff_ratio", cfg.pinv_cutoff_ratio}};
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  auto in = detail::open_for_read(path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Pipeline building blocks, shared by run_experiment and the CLI.
// ---------------------------------------------------------------------------

inline ShiftKind shift_kind_from(const std::string& name) {
  if (name == "laplacian") return ShiftKind::laplacian;
  if (name == "adjacency") return ShiftKind::adjacency;
  throw std::invalid_argument("shift must be 'laplacian' or 'adjacency'");
}

inline Graph build_factor_graph(const FactorSpec& spec) {
  if (spec.type == "cycle") {
    return build_cycle_graph(spec.n);
  }
  if (spec.type == "knn") {
    const Eigen::MatrixXd features = load_features(spec.path, spec.schema);
    const Metric metric = spec.metric == "cosine" ? Metric::cosine : Metric::euclidean;
    if (spec.metric != "cosine" && spec.metric != "euclidean") {
      throw std::invalid_argument("knn metric must be 'euclidean' or 'cosine'");
    }
    return build_knn_graph(features, spec.k, metric);
  }
  if (spec.type == "edges") {
    return load_edge_list(spec.path, spec.n);
  }
  throw std::invalid_argument("unknown factor type '" + spec.type + "'");
}

struct LoadedSignal {
  std::vector<ProductSignal> channels;
  bool is_ratings = false;
  bool raw_ids = false;  // entries placed at raw 1-based ids instead of the compact mapping
  RatingsData ratings;   // ratings only: id mappings for masks
  std::vector<std::string> warnings;
};

/// When expected factor sizes are given (from the graphs) and a ratings file
/// does not cover them with its compact id mapping, fall back to raw-id
/// placement so partial splits still line up with the feature graphs.
inline LoadedSignal load_signal(const SignalSpec& spec, int n1_expected = 0,
                                int n2_expected = 0) {
  LoadedSignal sig;
  if (spec.format == "pointcloud") {
    PointCloud pc = load_point_cloud(spec.path);
    sig.channels = std::move(pc.channels);
  } else if (spec.format == "ratings") {
    RatingsData data = load_ratings(spec.path);
    if (data.entries.empty()) {
      throw std::runtime_error(spec.path + ": ratings file has no entries");
    }
    const FillRule fill = spec.fill == "zero" ? FillRule::zero : FillRule::mean;
    sig.is_ratings = true;
    if (n1_expected > 0 && n2_expected > 0 &&
        (data.n_users() != n1_expected || data.n_items() != n2_expected) &&
        ratings_fit_raw_ids(data, n1_expected, n2_expected)) {
      sig.raw_ids = true;
      sig.channels.push_back(ratings_to_signal_raw(data, fill, n1_expected, n2_expected));
    } else {
      sig.channels.push_back(ratings_to_signal(data, fill));
    }
    sig.warnings = data.warnings;
    sig.ratings = std::move(data);
  } else if (spec.format == "matrix") {
    sig.channels.push_back(ProductSignal{load_matrix_csv(spec.path)});
  } else {
    throw std::invalid_argument("unknown signal format '" + spec.format + "'");
  }
  return sig;
}

inline std::pair<FrequencySupport, FrequencySupport> choose_supports(
    const SupportSpec& spec, const SpectralBasis& basis1, const SpectralBasis& basis2,
    const std::vector<ProductSignal>* channels) {
  if (spec.type == "first_k") {
    return {select_support_first_k(basis1, spec.k1),
            select_support_first_k(basis2, spec.k2)};
  }
  if (!channels || channels->empty()) {
    throw std::invalid_argument("energy support selection needs a signal");
  }
  std::vector<Eigen::MatrixXd> mats;
  mats.reserve(channels->size());
  for (const auto& ch : *channels) mats.push_back(ch.values);
  return select_support_by_energy(basis1, basis2, mats, spec.fraction);
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ResultRecord {
  Json doc;
};

/// In-memory artifacts of a run, for tests and plot emission.
struct ExperimentOutputs {
  std::vector<ProductSignal> truth;
  std::vector<ProductSignal> reconstruction;
  SamplingDesign design;
  IdentifiabilityReport identifiability;
};

/// Plot-support files: the full original-vs-reconstructed table, the
/// per-factor selected-vertex lists, and the flat selected-vertex list
/// (exactly L = |set1| + |set2| data lines).
inline void emit_plot_data(const std::string& out_dir,
                           const std::vector<ProductSignal>& truth,
                           const std::vector<ProductSignal>& reconstruction,
                           const SamplingDesign& design) {
  namespace fs = std::filesystem;
  if (!fs::exists(out_dir) && !fs::create_directories(out_dir)) {
    throw std::runtime_error("emit_plot_data: cannot create directory " + out_dir);
  }
  if (truth.empty() || truth.size() != reconstruction.size()) {
    throw std::invalid_argument("emit_plot_data: channel mismatch");
  }
  write_design(out_dir, design);
  {
    auto out = detail::open_for_write(out_dir + "/original_vs_reconstructed.csv");
    const int n1 = truth[0].n1(), n2 = truth[0].n2();
    for (int j = 0; j < n1; ++j) {
      for (int i = 0; i < n2; ++i) {
        out << (j + 1) << ',' << (i + 1);
        for (const auto& ch : truth) out << ',' << detail::format_double(ch.values(i, j));
        for (const auto& ch : reconstruction) out << ',' << detail::format_double(ch.values(i, j));
        out << '\n';
      }
    }
  }
  {
    auto out = detail::open_for_write(out_dir + "/selected_vertices.csv");
    for (int v : design.set1) out << 1 << ',' << (v + 1) << '\n';
    for (int v : design.set2) out << 2 << ',' << (v + 1) << '\n';
  }
}

namespace detail {

class StageClock {
 public:
  explicit StageClock(Json& timings) : timings_(&timings) {}

  template <typename F>
  auto run(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        finish(name, t0);
      } else {
        auto value = fn();
        finish(name, t0);
        return value;
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(name + " stage: " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(name + " stage: " + e.what());
    }
  }

 private:
  void finish(const std::string& name, std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    (*timings_)[name] =
        std::chrono::duration_cast<std::chrono::microseconds>(dt).count() / 1000.0;
  }

  Json* timings_;
};

inline Json identifiability_to_json(const IdentifiabilityReport& rep) {
  auto factor = [&](int f) {
    Json j;
    j["sigma_min"] = rep.sigma_min[std::size_t(f)];
    j["sigma_max"] = rep.sigma_max[std::size_t(f)];
    if (std::isfinite(rep.cond[std::size_t(f)])) {
      j["cond"] = rep.cond[std::size_t(f)];
    } else {
      j["cond"] = "inf";
    }
    return j;
  };
  Json j;
  j["identifiable"] = rep.identifiable;
  j["factor1"] = factor(0);
  j["factor2"] = factor(1);
  return j;
}

inline Json index_list_to_json(const std::vector<int>& set) {
  Json arr = Json::array();
  for (int v : set) arr.push_back(v + 1);  // 1-based externally
  return arr;
}

}  // namespace detail

/// Full pipeline: build graphs -> decompose -> reduce -> design -> sample ->
/// reconstruct -> evaluate; writes the record, design files and
/// reconstruction into output_dir when set. Identifiability failure is not
/// an exception: the record comes back with status "singular_system" and no
/// metrics.
inline ResultRecord run_experiment(const ExperimentConfig& cfg,
                                   ExperimentOutputs* outputs = nullptr) {
  namespace fs = std::filesystem;
  Json timings = Json::object();
  detail::StageClock clock(timings);

  ResultRecord record;
  Json& doc = record.doc;
  doc["library_version"] = kVersion;
  doc["status"] = "ok";
  doc["config"] = config_to_json(cfg);

  const Graph g1 = clock.run("factor1_graph", [&] { return build_factor_graph(cfg.factor1); });
  const Graph g2 = clock.run("factor2_graph", [&] { return build_factor_graph(cfg.factor2); });

  const ShiftKind kind = shift_kind_from(cfg.shift);
  const SpectralBasis basis1 =
      clock.run("factor1_eigendecomposition", [&] { return eigendecompose(make_shift(g1, kind)); });
  const SpectralBasis basis2 =
      clock.run("factor2_eigendecomposition", [&] { return eigendecompose(make_shift(g2, kind)); });

  LoadedSignal signal = clock.run("signal", [&] {
    LoadedSignal sig = load_signal(cfg.signal, g1.n, g2.n);
    for (const auto& ch : sig.channels) {
      if (ch.n1() != g1.n || ch.n2() != g2.n) {
        throw std::invalid_argument(
            "signal is " + std::to_string(ch.n2()) + " x " + std::to_string(ch.n1()) +
            " but the factor graphs have " + std::to_string(g2.n) + " and " +
            std::to_string(g1.n) + " vertices");
      }
    }
    return sig;
  });

  doc["data"] = {{"n1", g1.n},
                 {"n2", g2.n},
                 {"channels", signal.channels.size()},
                 {"warnings", signal.warnings}};
  if (signal.is_ratings) {
    doc["data"]["ratings_placement"] = signal.raw_ids ? "raw_ids" : "compact";
  }

  const auto [support1, support2] = clock.run("support", [&] {
    return choose_supports(cfg.support, basis1, basis2, &signal.channels);
  });
  doc["support"] = {{"k1", support1.k()}, {"k2", support2.k()}};

  const ProductModel model = clock.run("reduction", [&] {
    return ProductModel{reduce(basis1, support1), reduce(basis2, support2)};
  });

  const Budgets budgets{support1.k(), support2.k(), cfg.budget_l};
  SamplingDesign design;
  IdentifiabilityReport ident;
  Json random_info;
  clock.run("design", [&] {
    if (cfg.design.method == "greedy") {
      design = greedy_design(model, budgets);
      ident = check_identifiability(model, design, cfg.identifiability_ratio);
    } else {
      int identifiable_count = 0, selected_trial = -1;
      bool have = false;
      for (int t = 0; t < cfg.design.trials; ++t) {
        SamplingDesign d = random_design(g1.n, g2.n, budgets, cfg.design.seed + std::uint64_t(t));
        IdentifiabilityReport rep = check_identifiability(model, d, cfg.identifiability_ratio);
        if (rep.identifiable) {
          ++identifiable_count;
          if (!have) {
            design = d;
            ident = rep;
            selected_trial = t;
            have = true;
          }
        } else if (!have && t == 0) {
          design = d;
          ident = rep;
        }
      }
      random_info = {{"trials", cfg.design.trials},
                     {"identifiable", identifiable_count},
                     {"selected_trial", selected_trial}};
    }
  });

  doc["design"] = {{"method", cfg.design.method},
                   {"budgets", {{"k1", budgets.k1}, {"k2", budgets.k2}, {"l", budgets.l}}},
                   {"l1", design.set1.size()},
                   {"l2", design.set2.size()},
                   {"set1", detail::index_list_to_json(design.set1)},
                   {"set2", detail::index_list_to_json(design.set2)}};
  if (!random_info.is_null()) doc["design"]["random"] = random_info;
  doc["identifiability"] = detail::identifiability_to_json(ident);

  std::vector<ProductSignal> reconstruction;
  if (!ident.identifiable) {
    doc["status"] = "singular_system";
    doc["metrics"] = Json::object();
  } else {
    reconstruction = clock.run("reconstruction", [&] {
      std::vector<ProductSignal> rec;
      rec.reserve(signal.channels.size());
      for (const auto& ch : signal.channels) {
        const SampledObservation obs = sample(ch, design);
        const Eigen::MatrixXd coeffs =
            estimate_coefficients(obs, model, cfg.pinv_cutoff_ratio);
        rec.push_back(reconstruct_signal(coeffs, model));
      }
      return rec;
    });

    clock.run("evaluation", [&] {
      if (cfg.evaluation.metric == "relative_error") {
        doc["metrics"] = {{"relative_error", relative_error(reconstruction, signal.channels)}};
      } else {
        if (!signal.is_ratings) {
          throw std::invalid_argument("masked_rmse needs a ratings signal");
        }
        const RatingsData test = load_ratings(cfg.evaluation.test_path);
        int skipped = 0;
        const std::vector<MaskedEntry> mask =
            signal.raw_ids
                ? ratings_to_mask_raw(test, g1.n, g2.n, &skipped)
                : ratings_to_mask(test, signal.ratings.user_ids,
                                  signal.ratings.item_ids, &skipped);
        doc["metrics"] = {{"masked_rmse", masked_rmse(reconstruction[0], mask)},
                          {"mask_size", mask.size()},
                          {"skipped_test_entries", skipped}};
      }
    });
  }

  doc["constants"] = {{"knn_tie_rule", "lowest-index"},
                      {"knn_symmetrization", "union"},
                      {"greedy_tie_rule", "lowest-factor-then-lowest-vertex"},
                      {"identifiability_ratio", cfg.identifiability_ratio},
                      {"pinv_cutoff_ratio", cfg.pinv_cutoff_ratio},
                      {"shift_symmetry_tol", kShiftSymmetryTol},
                      {"laplacian_row_sum_tol", kLaplacianRowSumTol},
                      {"energy_prefix_slack", kEnergyPrefixSlack}};

  if (!cfg.output_dir.empty()) {
    clock.run("outputs", [&] {
      fs::create_directories(cfg.output_dir);
      write_design(cfg.output_dir, design);
      Json files = {{"record", "record.json"},
                    {"design_factor1", "design_factor1.txt"},
                    {"design_factor2", "design_factor2.txt"}};
      if (!reconstruction.empty()) {
        if (cfg.signal.format == "pointcloud") {
          write_point_cloud(cfg.output_dir + "/reconstruction.csv", reconstruction);
        } else {
          write_matrix_csv(cfg.output_dir + "/reconstruction.csv", reconstruction[0].values);
        }
        files["reconstruction"] = "reconstruction.csv";
      }
      if (cfg.emit_plots && !reconstruction.empty()) {
        emit_plot_data(cfg.output_dir, signal.channels, reconstruction, design);
        files["plot_table"] = "original_vs_reconstructed.csv";
        files["selected_vertices"] = "selected_vertices.csv";
      }
      doc["outputs"] = files;
    });
  }

  doc["timings_ms"] = timings;

  if (!cfg.output_dir.empty()) {
    auto out = detail::open_for_write(cfg.output_dir + "/record.json");
    out << doc.dump(2) << '\n';
  }

  if (outputs) {
    outputs->truth = std::move(signal.channels);
    outputs->reconstruction = std::move(reconstruction);
    outputs->design = design;
    outputs->identifiability = ident;
  }
  return record;
}

}  // namespace pgs
