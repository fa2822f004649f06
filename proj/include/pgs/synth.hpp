#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pgs/io.hpp"
#include "pgs/random.hpp"

namespace pgs {

// ---------------------------------------------------------------------------
// Dancer-shaped point cloud. The marker geometry has two parts:
//   - a "body": most markers strung densely along a smooth closed 3D curve,
//     so the spatial 5-NN graph is a connected chain with smooth, spread-out
//     low eigenvectors, and
//   - optional "satellites": small tight blobs placed far from the body and
//     from each other. Each becomes its own 5-NN component whose indicator
//     joins the low spectrum, so any sampling set that misses a satellite is
//     singular. That is what defeats random designs at dancer scale.
// Everything moves smoothly and periodically over the frames (integer
// harmonics of the cycle), plus a small per-marker wiggle.
// ---------------------------------------------------------------------------

struct PointCloudSynthConfig {
  int frames = 573;
  int markers = 1502;
  int motion_groups = 20;   // rigid-ish motion groups along the body
  int satellites = 20;      // isolated marker blobs
  int satellite_size = 25;  // markers per satellite
  double curve_radius = 10.0;
  double body_spread = 0.10;
  double satellite_spread = 0.3;
  double motion_amplitude = 1.2;
  double wiggle_amplitude = 0.08;
  int harmonics = 3;
  std::uint64_t seed = 1;
};

inline std::vector<ProductSignal> synth_point_cloud(const PointCloudSynthConfig& cfg) {
  const int satellite_markers = cfg.satellites * cfg.satellite_size;
  if (cfg.frames < 3 || cfg.markers < 1 || cfg.motion_groups < 1 ||
      cfg.motion_groups > cfg.markers || cfg.harmonics < 1 || cfg.satellites < 0 ||
      (cfg.satellites > 0 && cfg.satellite_size < 1) ||
      satellite_markers >= cfg.markers) {
    throw std::invalid_argument("synth_point_cloud: bad configuration");
  }
  std::mt19937_64 eng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);

  const int n1 = cfg.frames, n2 = cfg.markers;
  const int body_markers = n2 - satellite_markers;
  const int nc = cfg.motion_groups + cfg.satellites;  // motion units

  // group of each marker: body markers are segmented along the curve, each
  // satellite is its own group
  std::vector<int> cluster_of(n2);
  for (int m = 0; m < body_markers; ++m) {
    cluster_of[m] = (m * cfg.motion_groups) / body_markers;
  }
  for (int m = body_markers; m < n2; ++m) {
    cluster_of[m] = cfg.motion_groups + (m - body_markers) / cfg.satellite_size;
  }

  // static geometry
  std::vector<std::array<double, 3>> base(n2);
  for (int m = 0; m < body_markers; ++m) {
    const double th = 2.0 * std::numbers::pi * m / body_markers;
    base[m] = {cfg.curve_radius * std::cos(th) + cfg.body_spread * gauss(eng),
               cfg.curve_radius * std::sin(th) + cfg.body_spread * gauss(eng),
               0.3 * cfg.curve_radius * std::sin(2.0 * th) + cfg.body_spread * gauss(eng)};
  }
  for (int s = 0; s < cfg.satellites; ++s) {
    const double th = 2.0 * std::numbers::pi * s / std::max(1, cfg.satellites);
    const std::array<double, 3> center = {2.4 * cfg.curve_radius * std::cos(th),
                                          2.4 * cfg.curve_radius * std::sin(th),
                                          (s % 2 ? 1.4 : -1.4) * cfg.curve_radius};
    for (int i = 0; i < cfg.satellite_size; ++i) {
      const int m = body_markers + s * cfg.satellite_size + i;
      base[m] = {center[0] + cfg.satellite_spread * gauss(eng),
                 center[1] + cfg.satellite_spread * gauss(eng),
                 center[2] + cfg.satellite_spread * gauss(eng)};
    }
  }

  // periodic cluster motion: a few low harmonics per cluster and axis
  const int nh = cfg.harmonics;
  std::vector<double> amp_c(std::size_t(nc) * 3 * nh), ph_c(amp_c.size());
  for (std::size_t i = 0; i < amp_c.size(); ++i) {
    const int h = int(i % std::size_t(nh));
    amp_c[i] = cfg.motion_amplitude * gauss(eng) / double(h + 1);
    ph_c[i] = angle(eng);
  }
  // small per-marker wiggle on the same harmonics
  std::vector<double> amp_m(std::size_t(n2) * 3 * nh), ph_m(amp_m.size());
  for (std::size_t i = 0; i < amp_m.size(); ++i) {
    const int h = int(i % std::size_t(nh));
    amp_m[i] = cfg.wiggle_amplitude * gauss(eng) / double(h + 1);
    ph_m[i] = angle(eng);
  }

  // cluster displacement tables, one per axis: nc x n1
  std::vector<Eigen::MatrixXd> disp(3, Eigen::MatrixXd::Zero(nc, n1));
  for (int c = 0; c < nc; ++c) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int h = 0; h < nh; ++h) {
        const std::size_t idx = (std::size_t(c) * 3 + std::size_t(axis)) * std::size_t(nh) + std::size_t(h);
        for (int t = 0; t < n1; ++t) {
          disp[std::size_t(axis)](c, t) +=
              amp_c[idx] * std::cos(2.0 * std::numbers::pi * (h + 1) * t / n1 + ph_c[idx]);
        }
      }
    }
  }

  std::vector<ProductSignal> channels(3, ProductSignal{Eigen::MatrixXd::Zero(n2, n1)});
  for (int m = 0; m < n2; ++m) {
    const int c = cluster_of[m];
    for (int axis = 0; axis < 3; ++axis) {
      Eigen::RowVectorXd wiggle = Eigen::RowVectorXd::Zero(n1);
      for (int h = 0; h < nh; ++h) {
        const std::size_t idx = (std::size_t(m) * 3 + std::size_t(axis)) * std::size_t(nh) + std::size_t(h);
        for (int t = 0; t < n1; ++t) {
          wiggle[t] += amp_m[idx] * std::cos(2.0 * std::numbers::pi * (h + 1) * t / n1 + ph_m[idx]);
        }
      }
      channels[std::size_t(axis)].values.row(m) =
          Eigen::RowVectorXd::Constant(n1, base[m][std::size_t(axis)]) +
          disp[std::size_t(axis)].row(c) + wiggle;
    }
  }
  return channels;
}

/// Row means over frames: the N2 x C matrix of time-averaged marker
/// positions used to build the spatial k-NN graph.
inline Eigen::MatrixXd time_averaged_positions(const std::vector<ProductSignal>& channels) {
  if (channels.empty()) {
    throw std::invalid_argument("time_averaged_positions: no channels");
  }
  Eigen::MatrixXd features(channels[0].n2(), Eigen::Index(channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    features.col(Eigen::Index(c)) = channels[c].values.rowwise().mean();
  }
  return features;
}

// ---------------------------------------------------------------------------
// MovieLens-shaped ratings data: u.data-compatible train/test tuples plus
// feature files matching the documented schemas (user: age,gender,occupation
// with schema "scale01,onehot,onehot"; item: 19 genre flags, plain numeric).
// ---------------------------------------------------------------------------

struct RatingsSynthConfig {
  int users = 943;
  int items = 1682;
  int train_count = 100000;
  int test_count = 20000;
  int occupations = 8;
  int genres = 19;
  int latent_dim = 6;
  std::uint64_t seed = 1;
};

struct RatingsSynthPaths {
  std::string train;
  std::string test;
  std::string user_features;
  std::string item_features;
};

inline void synth_ratings_dataset(const RatingsSynthConfig& cfg,
                                  const RatingsSynthPaths& paths) {
  if (cfg.users < 2 || cfg.items < 2 || cfg.train_count < 1 || cfg.test_count < 0) {
    throw std::invalid_argument("synth_ratings_dataset: bad configuration");
  }
  const std::int64_t pairs = std::int64_t(cfg.users) * std::int64_t(cfg.items);
  if (cfg.train_count + cfg.test_count > pairs) {
    throw std::invalid_argument("synth_ratings_dataset: more tuples than (user, item) pairs");
  }
  std::mt19937_64 eng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int d = cfg.latent_dim;

  // occupation and genre latent centers drive both features and ratings, so
  // the k-NN feature graphs carry real signal structure
  std::vector<Eigen::VectorXd> occ_center(std::size_t(cfg.occupations));
  for (auto& v : occ_center) {
    v = Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return gauss(eng); });
  }
  std::vector<Eigen::VectorXd> genre_center(std::size_t(cfg.genres));
  for (auto& v : genre_center) {
    v = Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return gauss(eng); });
  }

  static const char* kOccupationNames[] = {"artist",  "doctor",  "educator",
                                           "engineer", "lawyer", "programmer",
                                           "student", "writer",  "other",
                                           "technician"};
  const int max_named = int(sizeof(kOccupationNames) / sizeof(kOccupationNames[0]));

  std::vector<Eigen::VectorXd> user_latent(std::size_t(cfg.users));
  {
    auto out = detail::open_for_write(paths.user_features);
    for (int u = 0; u < cfg.users; ++u) {
      const int occ = int(uniform_index(eng, std::uint64_t(cfg.occupations)));
      const int age = 18 + int(uniform_index(eng, 45));
      const bool male = uniform_index(eng, 2) == 0;
      user_latent[std::size_t(u)] =
          occ_center[std::size_t(occ)] +
          0.45 * Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return gauss(eng); });
      out << age << '|' << (male ? 'M' : 'F') << '|'
          << kOccupationNames[occ % max_named] << '\n';
    }
  }

  std::vector<Eigen::VectorXd> item_latent(std::size_t(cfg.items));
  {
    auto out = detail::open_for_write(paths.item_features);
    for (int i = 0; i < cfg.items; ++i) {
      std::vector<int> flags(std::size_t(cfg.genres), 0);
      const int active = 1 + int(uniform_index(eng, 3));
      Eigen::VectorXd latent = Eigen::VectorXd::Zero(d);
      for (int a = 0; a < active; ++a) {
        const int gidx = int(uniform_index(eng, std::uint64_t(cfg.genres)));
        flags[std::size_t(gidx)] = 1;
        latent += genre_center[std::size_t(gidx)];
      }
      latent /= double(active);
      item_latent[std::size_t(i)] =
          latent + 0.3 * Eigen::VectorXd::NullaryExpr(d, [&](Eigen::Index) { return gauss(eng); });
      for (int gjs = 0; gjs < cfg.genres; ++gjs) {
        if (gjs) out << ',';
        out << flags[std::size_t(gjs)];
      }
      out << '\n';
    }
  }

  auto truth = [&](int u, int i) {
    const double v =
        3.0 + 0.8 * user_latent[std::size_t(u)].dot(item_latent[std::size_t(i)]) / double(d);
    return std::min(5.0, std::max(1.0, std::round(v)));
  };

  // distinct (user, item) pairs for train + test via partial Fisher-Yates
  auto pool = std::vector<std::int64_t>(std::size_t(pairs));
  std::iota(pool.begin(), pool.end(), std::int64_t(0));
  const int want = cfg.train_count + cfg.test_count;
  for (int i = 0; i < want; ++i) {
    const std::int64_t j =
        i + std::int64_t(uniform_index(eng, std::uint64_t(pairs - i)));
    std::swap(pool[std::size_t(i)], pool[std::size_t(j)]);
  }

  auto write_tuples = [&](const std::string& path, int begin, int count) {
    auto out = detail::open_for_write(path);
    for (int t = 0; t < count; ++t) {
      const std::int64_t p = pool[std::size_t(begin + t)];
      const int u = int(p / cfg.items), i = int(p % cfg.items);
      const long long ts = 874000000LL + (long long)uniform_index(eng, 10000000);
      out << (u + 1) << '\t' << (i + 1) << '\t' << truth(u, i) << '\t' << ts << '\n';
    }
  };
  write_tuples(paths.train, 0, cfg.train_count);
  if (!paths.test.empty() && cfg.test_count > 0) {
    write_tuples(paths.test, cfg.train_count, cfg.test_count);
  }
}

}  // namespace pgs
