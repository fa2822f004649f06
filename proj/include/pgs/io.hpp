#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pgs/errors.hpp"
#include "pgs/graph.hpp"
#include "pgs/product.hpp"
#include "pgs/reconstruct.hpp"

namespace pgs {
namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size() && std::isfinite(out);
}

inline bool parse_ll(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

inline char detect_separator(const std::string& first_line) {
  if (first_line.find('|') != std::string::npos) return '|';
  if (first_line.find('\t') != std::string::npos) return '\t';
  return ',';
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point clouds: headerless long CSV, one row per (frame, marker):
//   frame,marker,v1[,v2,...]     (1-based indices)
// The channel count is inferred from the first row; the (frame, marker) grid
// must be complete.
// ---------------------------------------------------------------------------

struct PointCloud {
  std::vector<ProductSignal> channels;  // each N2 x N1 (markers x frames)
  int n1 = 0;                           // frames
  int n2 = 0;                           // markers
};

inline PointCloud load_point_cloud(const std::string& path) {
  auto in = detail::open_for_read(path);
  std::string line;
  long lineno = 0;
  int channels = -1;
  std::vector<int> frames, markers;
  std::vector<long> linenos;
  std::vector<double> values;  // row-major per input row
  int n1 = 0, n2 = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (channels < 0) {
      if (fields.size() < 3) {
        throw ParseError(path, lineno, "expected frame,marker,v1[,...]");
      }
      channels = int(fields.size()) - 2;
    }
    if (fields.size() != std::size_t(channels + 2)) {
      throw ParseError(path, lineno,
                       "expected " + std::to_string(channels + 2) + " fields, got " +
                           std::to_string(fields.size()));
    }
    long long frame = 0, marker = 0;
    if (!detail::parse_ll(fields[0], frame) || frame < 1) {
      throw ParseError(path, lineno, "bad frame index '" + fields[0] + "'");
    }
    if (!detail::parse_ll(fields[1], marker) || marker < 1) {
      throw ParseError(path, lineno, "bad marker index '" + fields[1] + "'");
    }
    for (int c = 0; c < channels; ++c) {
      double v = 0.0;
      if (!detail::parse_double(fields[std::size_t(c) + 2], v)) {
        throw ParseError(path, lineno,
                         "non-numeric cell '" + fields[std::size_t(c) + 2] + "'");
      }
      values.push_back(v);
    }
    frames.push_back(int(frame - 1));
    markers.push_back(int(marker - 1));
    linenos.push_back(lineno);
    n1 = std::max(n1, int(frame));
    n2 = std::max(n2, int(marker));
  }
  if (frames.empty()) {
    throw ParseError(path, lineno, "empty point cloud file");
  }

  PointCloud pc;
  pc.n1 = n1;
  pc.n2 = n2;
  pc.channels.assign(std::size_t(channels), ProductSignal{Eigen::MatrixXd::Zero(n2, n1)});
  std::vector<char> seen(std::size_t(n1) * std::size_t(n2), 0);
  for (std::size_t r = 0; r < frames.size(); ++r) {
    const auto cell = std::size_t(markers[r]) + std::size_t(frames[r]) * std::size_t(n2);
    if (seen[cell]) {
      throw ParseError(path, linenos[r],
                       "duplicate (frame, marker) = (" + std::to_string(frames[r] + 1) +
                           ", " + std::to_string(markers[r] + 1) + ")");
    }
    seen[cell] = 1;
    for (int c = 0; c < channels; ++c) {
      pc.channels[std::size_t(c)].values(markers[r], frames[r]) =
          values[r * std::size_t(channels) + std::size_t(c)];
    }
  }
  for (std::size_t cell = 0; cell < seen.size(); ++cell) {
    if (!seen[cell]) {
      const int marker = int(cell % std::size_t(n2));
      const int frame = int(cell / std::size_t(n2));
      throw std::runtime_error(path + ": incomplete grid, missing (frame, marker) = (" +
                               std::to_string(frame + 1) + ", " +
                               std::to_string(marker + 1) + ")");
    }
  }
  return pc;
}

inline void write_point_cloud(const std::string& path,
                              const std::vector<ProductSignal>& channels) {
  if (channels.empty()) {
    throw std::invalid_argument("write_point_cloud: no channels");
  }
  auto out = detail::open_for_write(path);
  const int n1 = channels[0].n1(), n2 = channels[0].n2();
  for (const auto& ch : channels) {
    if (ch.n1() != n1 || ch.n2() != n2) {
      throw std::invalid_argument("write_point_cloud: channel shape mismatch");
    }
  }
  for (int j = 0; j < n1; ++j) {
    for (int i = 0; i < n2; ++i) {
      out << (j + 1) << ',' << (i + 1);
      for (const auto& ch : channels) {
        out << ',' << detail::format_double(ch.values(i, j));
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Ratings: tab-separated "user item rating timestamp" lines (MovieLens
// u.data layout). Raw ids are mapped to contiguous 0-based indices in sorted
// order; the mapping is kept for masks and reports.
// ---------------------------------------------------------------------------

struct Rating {
  int user = 0;  // mapped, 0-based
  int item = 0;  // mapped, 0-based
  double value = 0.0;
  long long timestamp = 0;
};

struct RatingsData {
  std::vector<Rating> entries;
  std::vector<long long> user_ids;  // sorted raw ids; position = mapped index
  std::vector<long long> item_ids;
  int duplicates_dropped = 0;
  std::vector<std::string> warnings;

  int n_users() const { return int(user_ids.size()); }
  int n_items() const { return int(item_ids.size()); }
};

inline RatingsData load_ratings(const std::string& path) {
  auto in = detail::open_for_read(path);
  std::string line;
  long lineno = 0;
  struct RawEntry {
    long long user, item, timestamp;
    double value;
  };
  std::vector<RawEntry> raw;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::istringstream fields(line);
    RawEntry e{};
    std::string srating;
    if (!(fields >> e.user >> e.item >> srating >> e.timestamp) ||
        !(fields >> std::ws).eof() || !detail::parse_double(srating, e.value)) {
      throw ParseError(path, lineno, "expected 'user item rating timestamp'");
    }
    raw.push_back(e);
  }

  RatingsData data;
  if (raw.empty()) {
    data.warnings.push_back(path + ": empty ratings file");
    return data;
  }

  for (const auto& e : raw) {
    data.user_ids.push_back(e.user);
    data.item_ids.push_back(e.item);
  }
  auto dedupe_sort = [](std::vector<long long>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe_sort(data.user_ids);
  dedupe_sort(data.item_ids);
  auto index_of = [](const std::vector<long long>& ids, long long id) {
    return int(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };

  std::map<std::pair<int, int>, std::size_t> position;
  for (const auto& e : raw) {
    Rating r{index_of(data.user_ids, e.user), index_of(data.item_ids, e.item),
             e.value, e.timestamp};
    const auto key = std::make_pair(r.user, r.item);
    auto it = position.find(key);
    if (it == position.end()) {
      position.emplace(key, data.entries.size());
      data.entries.push_back(r);
    } else {
      data.entries[it->second] = r;  // keep last occurrence
      ++data.duplicates_dropped;
    }
  }
  if (data.duplicates_dropped > 0) {
    data.warnings.push_back(path + ": " + std::to_string(data.duplicates_dropped) +
                            " duplicate (user, item) pairs, kept last");
  }
  return data;
}

enum class FillRule { mean, zero };

/// Dense items x users matrix; absent entries take the global mean of
/// observed ratings (or zero).
inline ProductSignal ratings_to_signal(const RatingsData& data, FillRule fill) {
  double mean = 0.0;
  if (fill == FillRule::mean && !data.entries.empty()) {
    for (const auto& e : data.entries) mean += e.value;
    mean /= double(data.entries.size());
  }
  ProductSignal x;
  x.values = Eigen::MatrixXd::Constant(data.n_items(), data.n_users(), mean);
  for (const auto& e : data.entries) {
    x.values(e.item, e.user) = e.value;
  }
  return x;
}

/// True when every raw id fits directly into a fixed 1..n universe, e.g. a
/// MovieLens split whose feature files define the vertex sets.
inline bool ratings_fit_raw_ids(const RatingsData& data, int n_users, int n_items) {
  if (data.user_ids.empty()) return false;
  return data.user_ids.front() >= 1 && data.user_ids.back() <= n_users &&
         data.item_ids.front() >= 1 && data.item_ids.back() <= n_items;
}

/// Dense n_items x n_users matrix placing entries at their raw 1-based ids.
inline ProductSignal ratings_to_signal_raw(const RatingsData& data, FillRule fill,
                                           int n_users, int n_items) {
  if (!ratings_fit_raw_ids(data, n_users, n_items)) {
    throw std::invalid_argument("ratings_to_signal_raw: raw ids exceed the vertex sets");
  }
  double mean = 0.0;
  if (fill == FillRule::mean && !data.entries.empty()) {
    for (const auto& e : data.entries) mean += e.value;
    mean /= double(data.entries.size());
  }
  ProductSignal x;
  x.values = Eigen::MatrixXd::Constant(n_items, n_users, mean);
  for (const auto& e : data.entries) {
    x.values(int(data.item_ids[std::size_t(e.item)]) - 1,
             int(data.user_ids[std::size_t(e.user)]) - 1) = e.value;
  }
  return x;
}

/// Test tuples placed at raw 1-based ids; out-of-range ids are skipped.
inline std::vector<MaskedEntry> ratings_to_mask_raw(const RatingsData& test,
                                                    int n_users, int n_items,
                                                    int* skipped = nullptr) {
  std::vector<MaskedEntry> mask;
  int skip_count = 0;
  for (const auto& e : test.entries) {
    const long long user = test.user_ids[std::size_t(e.user)];
    const long long item = test.item_ids[std::size_t(e.item)];
    if (user < 1 || user > n_users || item < 1 || item > n_items) {
      ++skip_count;
      continue;
    }
    mask.push_back(MaskedEntry{int(item) - 1, int(user) - 1, e.value});
  }
  if (skipped) *skipped = skip_count;
  return mask;
}

/// Test tuples remapped through an existing train mapping; unknown ids are
/// skipped and counted.
inline std::vector<MaskedEntry> ratings_to_mask(const RatingsData& test,
                                                const std::vector<long long>& user_ids,
                                                const std::vector<long long>& item_ids,
                                                int* skipped = nullptr) {
  std::vector<MaskedEntry> mask;
  int skip_count = 0;
  auto lookup = [](const std::vector<long long>& ids, long long id) {
    const auto it = std::lower_bound(ids.begin(), ids.end(), id);
    return (it != ids.end() && *it == id) ? int(it - ids.begin()) : -1;
  };
  for (const auto& e : test.entries) {
    const long long raw_user = test.user_ids[std::size_t(e.user)];
    const long long raw_item = test.item_ids[std::size_t(e.item)];
    const int u = lookup(user_ids, raw_user);
    const int i = lookup(item_ids, raw_item);
    if (u < 0 || i < 0) {
      ++skip_count;
      continue;
    }
    mask.push_back(MaskedEntry{i, u, e.value});
  }
  if (skipped) *skipped = skip_count;
  return mask;
}

// ---------------------------------------------------------------------------
// Features: headerless rows, separator auto-detected ('|', tab or comma).
// A comma-separated schema assigns one token per column:
//   numeric   parse as a number
//   scale01   parse as a number, then min-max scale the column to [0, 1]
//   onehot    categorical; expands to one indicator column per distinct
//             value, categories ordered lexicographically
//   skip      ignore the column
// A final "numeric*" token covers all remaining columns (the default schema
// is just "numeric*").
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd load_features(const std::string& path,
                                     const std::string& schema = "numeric*") {
  auto in = detail::open_for_read(path);
  std::string line;
  long lineno = 0;
  char sep = ',';
  std::vector<std::vector<std::string>> rows;
  std::vector<long> linenos;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    if (rows.empty()) sep = detail::detect_separator(line);
    rows.push_back(detail::split(line, sep));
    linenos.push_back(lineno);
    if (rows.back().size() != rows.front().size()) {
      throw ParseError(path, lineno,
                       "row has " + std::to_string(rows.back().size()) +
                           " fields, expected " + std::to_string(rows.front().size()));
    }
  }
  if (rows.empty()) {
    throw ParseError(path, lineno, "empty features file");
  }
  const int cols = int(rows.front().size());

  std::vector<std::string> tokens = detail::split(schema, ',');
  if (tokens.empty()) {
    throw std::invalid_argument("load_features: empty schema");
  }
  bool rest_numeric = false;
  if (tokens.back() == "numeric*") {
    rest_numeric = true;
    tokens.pop_back();
  }
  if ((!rest_numeric && int(tokens.size()) != cols) ||
      (rest_numeric && int(tokens.size()) > cols)) {
    throw std::invalid_argument("load_features: schema covers " +
                                std::to_string(tokens.size()) +
                                (rest_numeric ? "+ columns" : " columns") +
                                ", file has " + std::to_string(cols));
  }
  while (int(tokens.size()) < cols) tokens.push_back("numeric");

  std::vector<std::vector<double>> out_cols;
  for (int c = 0; c < cols; ++c) {
    const std::string& tok = tokens[std::size_t(c)];
    if (tok == "skip") continue;
    if (tok == "numeric" || tok == "scale01") {
      std::vector<double> col(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!detail::parse_double(rows[r][std::size_t(c)], col[r])) {
          throw ParseError(path, linenos[r],
                           "non-numeric cell '" + rows[r][std::size_t(c)] +
                               "' in column " + std::to_string(c + 1));
        }
      }
      if (tok == "scale01") {
        const auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        const double lo = *mn, span = *mx - *mn;
        for (double& v : col) v = span > 0.0 ? (v - lo) / span : 0.0;
      }
      out_cols.push_back(std::move(col));
    } else if (tok == "onehot") {
      std::vector<std::string> cats;
      for (const auto& row : rows) cats.push_back(row[std::size_t(c)]);
      std::sort(cats.begin(), cats.end());
      cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
      for (const auto& cat : cats) {
        std::vector<double> col(rows.size(), 0.0);
        for (std::size_t r = 0; r < rows.size(); ++r) {
          if (rows[r][std::size_t(c)] == cat) col[r] = 1.0;
        }
        out_cols.push_back(std::move(col));
      }
    } else {
      throw std::invalid_argument("load_features: unknown schema token '" + tok + "'");
    }
  }
  if (out_cols.empty()) {
    throw std::invalid_argument("load_features: schema selects no columns");
  }

  Eigen::MatrixXd features(Eigen::Index(rows.size()), Eigen::Index(out_cols.size()));
  for (std::size_t c = 0; c < out_cols.size(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      features(Eigen::Index(r), Eigen::Index(c)) = out_cols[c][r];
    }
  }
  return features;
}

inline void write_features(const std::string& path, const Eigen::MatrixXd& features) {
  auto out = detail::open_for_write(path);
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      if (c) out << ',';
      out << detail::format_double(features(r, c));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Edge lists: whitespace-separated "i j w" lines, 1-based endpoints.
// ---------------------------------------------------------------------------

inline Graph load_edge_list(const std::string& path, int n_override = 0) {
  auto in = detail::open_for_read(path);
  std::string line;
  long lineno = 0;
  Graph g;
  int max_vertex = 0;
  for (; std::getline(in, line);) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    long long i = 0, j = 0;
    double w = 0.0;
    if (!(fields >> i >> j >> w) || !(fields >> std::ws).eof()) {
      throw ParseError(path, lineno, "expected 'i j w'");
    }
    if (i < 1 || j < 1 || i == j) {
      throw ParseError(path, lineno, "endpoints must be distinct and >= 1");
    }
    if (!(w > 0.0)) {
      throw ParseError(path, lineno, "weight must be strictly positive");
    }
    const int a = int(std::min(i, j)) - 1, b = int(std::max(i, j)) - 1;
    g.edges.push_back({a, b, w});
    max_vertex = std::max(max_vertex, b + 1);
  }
  if (n_override > 0) {
    if (max_vertex > n_override) {
      throw std::invalid_argument(path + ": edge endpoint exceeds declared vertex count");
    }
    g.n = n_override;
  } else {
    g.n = max_vertex;
  }
  validate(g);
  return g;
}

// ---------------------------------------------------------------------------
// Designs: sorted 1-based index lists, one per factor file.
// ---------------------------------------------------------------------------

inline void write_index_list(const std::string& path, const std::vector<int>& set) {
  auto out = detail::open_for_write(path);
  for (int v : set) out << (v + 1) << '\n';
}

inline std::vector<int> load_index_list(const std::string& path) {
  auto in = detail::open_for_read(path);
  std::string line;
  long lineno = 0;
  std::vector<int> out;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    long long v = 0;
    if (!detail::parse_ll(line, v) || v < 1) {
      throw ParseError(path, lineno, "expected a 1-based vertex index");
    }
    out.push_back(int(v - 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void write_design(const std::string& dir, const SamplingDesign& design) {
  write_index_list(dir + "/design_factor1.txt", design.set1);
  write_index_list(dir + "/design_factor2.txt", design.set2);
}

// ---------------------------------------------------------------------------
// Dense matrices: headerless CSV, one row per matrix row.
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  std::string line;
  long lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!detail::parse_double(fields[c], row[c])) {
        throw ParseError(path, lineno, "non-numeric cell '" + fields[c] + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path, lineno, "ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw ParseError(path, lineno, "empty matrix file");
  }
  Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
    }
  }
  return m;
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  auto out = detail::open_for_write(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << detail::format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace pgs
