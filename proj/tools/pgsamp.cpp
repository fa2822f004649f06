// pgsamp: design sparse sampling sets on the factors of a product graph and
// reconstruct jointly bandlimited product-graph signals from the samples.
//
// Subcommands: design, reconstruct, evaluate, run, synth. See README.md.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pgs/pgs.hpp"

namespace {

struct FactorFlags {
  int cycle_n = 0;
  std::string knn_features;
  int knn_k = 0;
  std::string knn_metric = "euclidean";
  std::string knn_schema = "numeric*";
  std::string edges_path;
  int edges_n = 0;
};

void add_factor_flags(CLI::App* cmd, const std::string& prefix, FactorFlags& f) {
  cmd->add_option("--" + prefix + "-cycle", f.cycle_n, "cycle graph with N vertices");
  cmd->add_option("--" + prefix + "-knn", f.knn_features, "k-NN graph from a feature file");
  cmd->add_option("--" + prefix + "-k", f.knn_k, "neighbor count for --" + prefix + "-knn");
  cmd->add_option("--" + prefix + "-metric", f.knn_metric, "euclidean|cosine")
      ->check(CLI::IsMember({"euclidean", "cosine"}));
  cmd->add_option("--" + prefix + "-schema", f.knn_schema,
                  "feature schema (numeric|scale01|onehot|skip, trailing numeric*)");
  cmd->add_option("--" + prefix + "-edges", f.edges_path, "graph from a 1-based edge list");
  cmd->add_option("--" + prefix + "-n", f.edges_n, "declared vertex count for --" + prefix + "-edges");
}

pgs::FactorSpec factor_spec_from(const FactorFlags& f, const std::string& prefix) {
  pgs::FactorSpec spec;
  const int given = (f.cycle_n > 0) + !f.knn_features.empty() + !f.edges_path.empty();
  if (given != 1) {
    throw CLI::ValidationError("factor " + prefix,
                               "give exactly one of --" + prefix + "-cycle, --" + prefix +
                                   "-knn, --" + prefix + "-edges");
  }
  if (f.cycle_n > 0) {
    spec.type = "cycle";
    spec.n = f.cycle_n;
  } else if (!f.knn_features.empty()) {
    spec.type = "knn";
    spec.path = f.knn_features;
    spec.k = f.knn_k;
    spec.metric = f.knn_metric;
    spec.schema = f.knn_schema;
  } else {
    spec.type = "edges";
    spec.path = f.edges_path;
    spec.n = f.edges_n;
  }
  return spec;
}

void print_identifiability(const pgs::IdentifiabilityReport& rep, std::ostream& os) {
  os << "identifiable: " << (rep.identifiable ? "yes" : "no") << '\n';
  for (int f = 0; f < 2; ++f) {
    os << "  factor " << (f + 1) << ": sigma_min=" << rep.sigma_min[std::size_t(f)]
       << " sigma_max=" << rep.sigma_max[std::size_t(f)] << " cond=";
    if (std::isfinite(rep.cond[std::size_t(f)])) {
      os << rep.cond[std::size_t(f)];
    } else {
      os << "inf";
    }
    os << '\n';
  }
}

std::vector<pgs::ProductSignal> load_channels(const std::string& format,
                                              const std::string& path,
                                              const std::string& fill) {
  pgs::SignalSpec spec;
  spec.format = format;
  spec.path = path;
  spec.fill = fill;
  return pgs::load_signal(spec).channels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse sampling and reconstruction on product graphs"};
  app.require_subcommand(1);

  // ----------------------------------------------------------------- design
  auto* design_cmd = app.add_subcommand("design", "design per-factor sampling sets");
  FactorFlags d_f1, d_f2;
  add_factor_flags(design_cmd, "f1", d_f1);
  add_factor_flags(design_cmd, "f2", d_f2);
  std::string d_shift = "laplacian";
  design_cmd->add_option("--shift", d_shift, "laplacian|adjacency")
      ->check(CLI::IsMember({"laplacian", "adjacency"}));
  int d_k1 = 0, d_k2 = 0, d_budget = 0, d_trials = 1;
  double d_energy = 0.0;
  std::string d_method = "greedy", d_out, d_signal, d_format = "pointcloud";
  std::uint64_t d_seed = 0;
  design_cmd->add_option("--k1", d_k1, "retained factor-1 frequencies");
  design_cmd->add_option("--k2", d_k2, "retained factor-2 frequencies");
  design_cmd->add_option("--energy", d_energy, "energy fraction for support selection");
  design_cmd->add_option("--signal", d_signal, "signal file (needed with --energy)");
  design_cmd->add_option("--format", d_format, "pointcloud|ratings|matrix")
      ->check(CLI::IsMember({"pointcloud", "ratings", "matrix"}));
  design_cmd->add_option("--budget", d_budget, "total sample budget L")->required();
  design_cmd->add_option("--method", d_method, "greedy|random")
      ->check(CLI::IsMember({"greedy", "random"}));
  auto* d_seed_opt = design_cmd->add_option("--seed", d_seed, "seed (mandatory for --method random)");
  design_cmd->add_option("--trials", d_trials, "random draws to try");
  design_cmd->add_option("--out", d_out, "output directory")->required();

  // ------------------------------------------------------------ reconstruct
  auto* rec_cmd = app.add_subcommand("reconstruct", "reconstruct a signal from designed samples");
  FactorFlags r_f1, r_f2;
  add_factor_flags(rec_cmd, "f1", r_f1);
  add_factor_flags(rec_cmd, "f2", r_f2);
  std::string r_shift = "laplacian";
  rec_cmd->add_option("--shift", r_shift, "laplacian|adjacency")
      ->check(CLI::IsMember({"laplacian", "adjacency"}));
  int r_k1 = 0, r_k2 = 0;
  std::string r_set1, r_set2, r_signal, r_format = "pointcloud", r_fill = "mean", r_out;
  rec_cmd->add_option("--k1", r_k1, "retained factor-1 frequencies")->required();
  rec_cmd->add_option("--k2", r_k2, "retained factor-2 frequencies")->required();
  rec_cmd->add_option("--set1", r_set1, "factor-1 design file (1-based indices)")->required();
  rec_cmd->add_option("--set2", r_set2, "factor-2 design file")->required();
  rec_cmd->add_option("--signal", r_signal, "signal file")->required();
  rec_cmd->add_option("--format", r_format, "pointcloud|ratings|matrix")
      ->check(CLI::IsMember({"pointcloud", "ratings", "matrix"}));
  rec_cmd->add_option("--fill", r_fill, "mean|zero (ratings)")
      ->check(CLI::IsMember({"mean", "zero"}));
  rec_cmd->add_option("--out", r_out, "output directory")->required();

  // --------------------------------------------------------------- evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "compute a reconstruction metric");
  std::string e_metric = "relative-error", e_estimate, e_truth, e_format = "pointcloud";
  std::string e_test, e_train;
  eval_cmd->add_option("--metric", e_metric, "relative-error|masked-rmse")
      ->check(CLI::IsMember({"relative-error", "masked-rmse"}));
  eval_cmd->add_option("--estimate", e_estimate, "reconstructed signal file")->required();
  eval_cmd->add_option("--truth", e_truth, "reference signal (relative-error)");
  eval_cmd->add_option("--format", e_format, "pointcloud|matrix")
      ->check(CLI::IsMember({"pointcloud", "matrix"}));
  eval_cmd->add_option("--test", e_test, "test ratings file (masked-rmse)");
  eval_cmd->add_option("--train", e_train, "train ratings file that fixes the id mapping");

  // -------------------------------------------------------------------- run
  auto* run_cmd = app.add_subcommand("run", "full pipeline from a JSON config");
  std::string run_config, run_out;
  std::uint64_t run_seed = 0;
  run_cmd->add_option("--config", run_config, "experiment config (JSON)")->required();
  run_cmd->add_option("--out", run_out, "override output directory");
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "override design seed");

  // ------------------------------------------------------------------ synth
  auto* synth_cmd = app.add_subcommand("synth", "generate synthetic datasets");
  synth_cmd->require_subcommand(1);

  auto* s_pc = synth_cmd->add_subcommand("pointcloud", "dancer-shaped dynamic point cloud");
  pgs::PointCloudSynthConfig pc_cfg;
  std::string pc_out, pc_features;
  s_pc->add_option("--frames", pc_cfg.frames, "frame count N1");
  s_pc->add_option("--markers", pc_cfg.markers, "marker count N2");
  s_pc->add_option("--motion-groups", pc_cfg.motion_groups, "rigid motion group count");
  s_pc->add_option("--satellites", pc_cfg.satellites, "isolated marker blob count");
  s_pc->add_option("--satellite-size", pc_cfg.satellite_size, "markers per satellite");
  s_pc->add_option("--spread", pc_cfg.body_spread, "body marker spread");
  s_pc->add_option("--seed", pc_cfg.seed, "seed")->required();
  s_pc->add_option("--out", pc_out, "point-cloud CSV to write")->required();
  s_pc->add_option("--features", pc_features, "also write time-averaged marker features");

  auto* s_rt = synth_cmd->add_subcommand("ratings", "MovieLens-shaped ratings data");
  pgs::RatingsSynthConfig rt_cfg;
  pgs::RatingsSynthPaths rt_paths;
  s_rt->add_option("--users", rt_cfg.users, "user count");
  s_rt->add_option("--items", rt_cfg.items, "item count");
  s_rt->add_option("--train-count", rt_cfg.train_count, "train tuple count");
  s_rt->add_option("--test-count", rt_cfg.test_count, "test tuple count");
  s_rt->add_option("--seed", rt_cfg.seed, "seed")->required();
  s_rt->add_option("--train", rt_paths.train, "train tuples file")->required();
  s_rt->add_option("--test", rt_paths.test, "test tuples file");
  s_rt->add_option("--user-features", rt_paths.user_features, "user feature file")->required();
  s_rt->add_option("--item-features", rt_paths.item_features, "item feature file")->required();

  auto* s_ft = synth_cmd->add_subcommand(
      "features", "time-averaged marker positions from a point cloud");
  std::string ft_in, ft_out;
  s_ft->add_option("--pointcloud", ft_in, "point-cloud CSV")->required();
  s_ft->add_option("--out", ft_out, "feature CSV to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*design_cmd) {
      if (d_method == "random" && !*d_seed_opt) {
        std::cerr << "error: --method random requires --seed\n";
        return 1;
      }
      const pgs::Graph g1 = pgs::build_factor_graph(factor_spec_from(d_f1, "f1"));
      const pgs::Graph g2 = pgs::build_factor_graph(factor_spec_from(d_f2, "f2"));
      const pgs::ShiftKind kind = pgs::shift_kind_from(d_shift);
      const pgs::SpectralBasis b1 = pgs::eigendecompose(pgs::make_shift(g1, kind));
      const pgs::SpectralBasis b2 = pgs::eigendecompose(pgs::make_shift(g2, kind));

      pgs::SupportSpec sup;
      if (d_energy > 0.0) {
        sup.type = "energy";
        sup.fraction = d_energy;
      } else {
        sup.type = "first_k";
        sup.k1 = d_k1;
        sup.k2 = d_k2;
      }
      std::vector<pgs::ProductSignal> channels;
      if (sup.type == "energy") {
        if (d_signal.empty()) {
          std::cerr << "error: --energy needs --signal\n";
          return 1;
        }
        channels = load_channels(d_format, d_signal, "mean");
      }
      const auto [sup1, sup2] = pgs::choose_supports(sup, b1, b2, &channels);
      const pgs::ProductModel model{pgs::reduce(b1, sup1), pgs::reduce(b2, sup2)};
      const pgs::Budgets budgets{sup1.k(), sup2.k(), d_budget};

      pgs::SamplingDesign design;
      if (d_method == "greedy") {
        design = pgs::greedy_design(model, budgets);
      } else {
        design = pgs::random_design(g1.n, g2.n, budgets, d_seed);
        for (int t = 1; t < d_trials; ++t) {
          if (pgs::check_identifiability(model, design).identifiable) break;
          design = pgs::random_design(g1.n, g2.n, budgets, d_seed + std::uint64_t(t));
        }
      }
      const pgs::IdentifiabilityReport rep = pgs::check_identifiability(model, design);

      std::filesystem::create_directories(d_out);
      pgs::write_design(d_out, design);
      pgs::Json summary;
      summary["library_version"] = pgs::kVersion;
      summary["method"] = d_method;
      summary["budgets"] = {{"k1", budgets.k1}, {"k2", budgets.k2}, {"l", budgets.l}};
      summary["l1"] = design.set1.size();
      summary["l2"] = design.set2.size();
      summary["identifiable"] = rep.identifiable;
      std::ofstream(d_out + "/design.json") << summary.dump(2) << '\n';

      std::cout << "designed |set1| = " << design.set1.size()
                << ", |set2| = " << design.set2.size() << " (L = " << budgets.l << ")\n";
      print_identifiability(rep, std::cout);
      if (!rep.identifiable) {
        std::cerr << "warning: design is not identifiable; reconstruction from it will fail\n";
      }
      return 0;
    }

    if (*rec_cmd) {
      const pgs::Graph g1 = pgs::build_factor_graph(factor_spec_from(r_f1, "f1"));
      const pgs::Graph g2 = pgs::build_factor_graph(factor_spec_from(r_f2, "f2"));
      const pgs::ShiftKind kind = pgs::shift_kind_from(r_shift);
      const pgs::SpectralBasis b1 = pgs::eigendecompose(pgs::make_shift(g1, kind));
      const pgs::SpectralBasis b2 = pgs::eigendecompose(pgs::make_shift(g2, kind));
      const pgs::ProductModel model{pgs::reduce(b1, pgs::select_support_first_k(b1, r_k1)),
                                    pgs::reduce(b2, pgs::select_support_first_k(b2, r_k2))};

      pgs::SamplingDesign design;
      design.set1 = pgs::load_index_list(r_set1);
      design.set2 = pgs::load_index_list(r_set2);
      design.budgets = {r_k1, r_k2, int(design.set1.size() + design.set2.size())};
      pgs::validate(design, g1.n, g2.n);

      const std::vector<pgs::ProductSignal> channels = load_channels(r_format, r_signal, r_fill);
      std::vector<pgs::ProductSignal> reconstruction;
      for (const auto& ch : channels) {
        const pgs::SampledObservation obs = pgs::sample(ch, design);
        reconstruction.push_back(
            pgs::reconstruct_signal(pgs::estimate_coefficients(obs, model), model));
      }

      std::filesystem::create_directories(r_out);
      if (r_format == "pointcloud") {
        pgs::write_point_cloud(r_out + "/reconstruction.csv", reconstruction);
      } else {
        pgs::write_matrix_csv(r_out + "/reconstruction.csv", reconstruction[0].values);
      }
      std::cout << "wrote " << r_out << "/reconstruction.csv\n";
      return 0;
    }

    if (*eval_cmd) {
      if (e_metric == "relative-error") {
        if (e_truth.empty()) {
          std::cerr << "error: --metric relative-error needs --truth\n";
          return 1;
        }
        const auto estimate = load_channels(e_format, e_estimate, "mean");
        const auto truth = load_channels(e_format, e_truth, "mean");
        std::cout << "relative_error " << pgs::relative_error(estimate, truth) << '\n';
      } else {
        if (e_test.empty() || e_train.empty()) {
          std::cerr << "error: --metric masked-rmse needs --test and --train\n";
          return 1;
        }
        const Eigen::MatrixXd estimate = pgs::load_matrix_csv(e_estimate);
        const pgs::RatingsData train = pgs::load_ratings(e_train);
        const pgs::RatingsData test = pgs::load_ratings(e_test);
        const int n_users = int(estimate.cols()), n_items = int(estimate.rows());
        const bool raw_ids =
            (train.n_users() != n_users || train.n_items() != n_items) &&
            pgs::ratings_fit_raw_ids(train, n_users, n_items);
        int skipped = 0;
        const auto mask =
            raw_ids ? pgs::ratings_to_mask_raw(test, n_users, n_items, &skipped)
                    : pgs::ratings_to_mask(test, train.user_ids, train.item_ids, &skipped);
        std::cout << "masked_rmse "
                  << pgs::masked_rmse(pgs::ProductSignal{estimate}, mask) << " (mask "
                  << mask.size() << ", skipped " << skipped << ")\n";
      }
      return 0;
    }

    if (*run_cmd) {
      pgs::ExperimentConfig cfg = pgs::load_config(run_config);
      if (!run_out.empty()) cfg.output_dir = run_out;
      if (*run_seed_opt) cfg.design.seed = run_seed;
      const pgs::ResultRecord record = pgs::run_experiment(cfg);
      const std::string status = record.doc.at("status").get<std::string>();
      std::cout << record.doc.dump(2) << '\n';
      if (status != "ok") {
        std::cerr << "singular system: the designed samples cannot identify the "
                     "bandlimited coefficients\n";
        std::cerr << record.doc.at("identifiability").dump(2) << '\n';
        return 2;
      }
      return 0;
    }

    if (*s_pc) {
      const std::vector<pgs::ProductSignal> channels = pgs::synth_point_cloud(pc_cfg);
      pgs::write_point_cloud(pc_out, channels);
      if (!pc_features.empty()) {
        pgs::write_features(pc_features, pgs::time_averaged_positions(channels));
      }
      std::cout << "wrote " << pc_out << " (" << pc_cfg.frames << " frames x "
                << pc_cfg.markers << " markers)\n";
      return 0;
    }

    if (*s_rt) {
      pgs::synth_ratings_dataset(rt_cfg, rt_paths);
      std::cout << "wrote " << rt_paths.train << " (+" << rt_cfg.test_count
                << " test tuples)\n";
      return 0;
    }

    if (*s_ft) {
      const pgs::PointCloud pc = pgs::load_point_cloud(ft_in);
      pgs::write_features(ft_out, pgs::time_averaged_positions(pc.channels));
      std::cout << "wrote " << ft_out << " (" << pc.n2 << " markers)\n";
      return 0;
    }
  } catch (const pgs::SingularSystemError& e) {
    std::cerr << "singular system: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
