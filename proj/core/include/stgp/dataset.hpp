#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stgp/types.hpp"

namespace stgp {

/// Spatio-temporal observations on the union of their sites.
///
/// `values(n, k)` is the observation at time `times(n)` and site `sites.row(k)`,
/// NaN where nothing was observed. Times are strictly increasing; sites are
/// sorted lexicographically and unique.
struct GridDataset {
  Vector times;   // N_t
  Matrix sites;   // N_s x D_s
  Matrix values;  // N_t x N_s

  Index num_times() const { return times.size(); }
  Index num_sites() const { return sites.rows(); }
  Index spatial_dim() const { return sites.cols(); }
  bool observed(Index n, Index k) const;
  Index num_observed() const;
  Index num_missing() const { return values.size() - num_observed(); }
  /// True when every (time, site) pair carries a value.
  bool fully_gridded() const { return num_missing() == 0; }
  bool empty() const { return num_observed() == 0; }
};

/// One raw observation as it appears in a file.
struct Observation {
  double t = 0.0;
  Vector s;
  double y = 0.0;  // NaN for missing
};

/// Groups rows by timestamp and site. Throws DataError on an empty input,
/// inconsistent spatial dimension, or a repeated (t, s) pair.
GridDataset make_dataset(const std::vector<Observation>& rows);

/// Parses `t,s1[,s2,...],y`; empty or `nan` y marks a missing value.
GridDataset parse_csv(std::istream& in);
GridDataset load_csv(const std::string& path);

/// Rows of a prediction query in file order, with optional targets.
struct QueryTable {
  Vector times;   // one per row
  Matrix sites;   // rows x D_s
  Vector targets; // NaN where absent; empty when the file has no y column
  bool has_targets() const { return targets.size() > 0; }
};

/// Parses `t,s1[,s2,...][,y]`. Same cell rules and errors as parse_csv, but
/// rows are kept as given and no grouping happens.
QueryTable parse_query_csv(std::istream& in);
QueryTable load_query_csv(const std::string& path);

/// Writes every (time, site) pair in time-major order, missing values as `nan`.
void write_csv(std::ostream& out, const GridDataset& data);
void save_csv(const std::string& path, const GridDataset& data);

/// Time-major, then space: entry n * N_s + k holds values(n, k).
Vector vec(const Matrix& values);
Matrix unvec(const Vector& v, Index num_times, Index num_sites);

/// Observation-level K-fold split with a seeded shuffle. Returns the
/// (train, test) pair for `fold`, each keeping the full grid with the other
/// part masked out.
std::pair<GridDataset, GridDataset> kfold_split(const GridDataset& data, int folds, int fold,
                                                std::uint64_t seed);

/// Optional input normalisation, recorded so that queries can be mapped the same way.
struct InputScaling {
  double time_offset = 0.0;
  double time_scale = 1.0;
  Vector space_offset;
  Vector space_scale;

  bool identity() const;
  double map_time(double t) const { return (t - time_offset) / time_scale; }
  Vector map_site(const Vector& s) const;
};

/// Z-scores the spatial coordinates and rescales time to a unit median step.
InputScaling fit_scaling(const GridDataset& data);
GridDataset apply_scaling(const GridDataset& data, const InputScaling& scaling);

}  // namespace stgp
