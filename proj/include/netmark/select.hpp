#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "netmark/kmeans.hpp"
#include "netmark/netlist.hpp"
#include "netmark/sim.hpp"

namespace netmark {

inline constexpr int kExcludedNet = -1;

struct ClusterModel {
  std::size_t k = 0;
  /// Cluster per net, or kExcludedNet for nets whose trace is constant.
  std::vector<int> assignment;
  /// Centroids in trace space, one column per cluster.
  DenseMatrix<double> centroids;
  std::size_t iterations_run = 0;
  std::uint64_t seed = 0;
  std::vector<double> distortion_history;
  /// Trace rows the clustering saw (all rows unless subsampled).
  std::vector<std::size_t> rows_used;

  std::vector<NetId> members(std::size_t cluster) const;
};

struct ClusterOptions {
  std::size_t max_iters = 100;
  /// Traces longer than this are subsampled to `subsample_rows` rows.
  std::size_t max_rows = 10000;
  std::size_t subsample_rows = 4096;
};

struct NetScore {
  NetId net;
  double sw = 0;
  double fanin_norm = 0;
  double p = 0;
};

struct SensitiveNet {
  NetId net;
  std::size_t cluster = 0;
  NetScore score;
};

struct SensitiveSet {
  /// One entry per non-empty cluster, ordered by cluster index.
  std::vector<SensitiveNet> members;
  std::uint64_t seed = 0;
  std::size_t k = 0;
  double threshold = 0;
  std::vector<std::size_t> skipped_clusters;

  std::size_t size() const { return members.size(); }
  std::vector<NetId> nets() const;
};

/// Euclidean distance between two nets' 0/1 trace columns, sqrt(Hamming).
double trace_distance(const TraceMatrix& trace, NetId a, NetId b);

/// True when the net holds one value over every trace row.
bool trace_is_constant(const TraceMatrix& trace, NetId net);

/// Dense 0/1 copy of the selected columns (and rows), one column per net.
DenseMatrix<double> trace_points(const TraceMatrix& trace, std::span<const NetId> nets,
                                 std::span<const std::size_t> rows);

/// k-means over the trace columns of every non-constant net.
ClusterModel cluster_nets(const TraceMatrix& trace, std::size_t k, std::uint64_t seed,
                          const ClusterOptions& options = {});

/// p = 0.5 * SW + 0.5 * cone / max cone, indexed by NetId.
std::vector<NetScore> score_nets(const Netlist& netlist, const ActivityProfile& activity);
/// Same combination over precomputed cone sizes.
std::vector<NetScore> score_nets(std::span<const std::size_t> cone_sizes, const ActivityProfile& activity);

/// Per cluster: rank members by p (ties by NetId), keep the top
/// ceil(threshold * size) (at least one), pick one uniformly with `seed`.
SensitiveSet select_sensitive(const ClusterModel& model, std::span<const NetScore> scores, double threshold,
                              std::uint64_t seed);

nlohmann::json to_json(const SensitiveSet& set, const Netlist& netlist);

}  // namespace netmark
