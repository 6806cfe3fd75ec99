#include "netmark/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace netmark {

std::vector<NetId> ClusterModel::members(std::size_t cluster) const {
  std::vector<NetId> out;
  for (std::size_t n = 0; n < assignment.size(); ++n) {
    if (assignment[n] == static_cast<int>(cluster)) out.emplace_back(n);
  }
  return out;
}

std::vector<NetId> SensitiveSet::nets() const {
  std::vector<NetId> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(m.net);
  return out;
}

double trace_distance(const TraceMatrix& trace, NetId a, NetId b) {
  if (a.index() >= trace.nets() || b.index() >= trace.nets()) {
    throw std::out_of_range("net handle out of range for trace");
  }
  const auto ca = trace.column(a);
  const auto cb = trace.column(b);
  std::size_t hamming = 0;
  for (std::size_t w = 0; w < ca.size(); ++w) hamming += static_cast<std::size_t>(std::popcount(ca[w] ^ cb[w]));
  return std::sqrt(static_cast<double>(hamming));
}

bool trace_is_constant(const TraceMatrix& trace, NetId net) {
  const auto col = trace.column(net);
  std::size_t ones = 0;
  for (std::uint64_t w : col) ones += static_cast<std::size_t>(std::popcount(w));
  return ones == 0 || ones == trace.rows();
}

DenseMatrix<double> trace_points(const TraceMatrix& trace, std::span<const NetId> nets,
                                 std::span<const std::size_t> rows) {
  DenseMatrix<double> points(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(nets.size()));
  for (std::size_t j = 0; j < nets.size(); ++j) {
    const auto col = trace.column(nets[j]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          static_cast<double>((col[rows[r] >> 6] >> (rows[r] & 63)) & 1U);
    }
  }
  return points;
}

namespace {

std::vector<std::size_t> choose_rows(std::size_t rows, std::uint64_t seed, const ClusterOptions& options) {
  std::vector<std::size_t> all(rows);
  std::iota(all.begin(), all.end(), 0);
  if (rows <= options.max_rows || options.subsample_rows >= rows) return all;
  // Partial Fisher-Yates, then restore ascending row order.
  Rng rng(mix64(seed ^ 0x726f777375627361ULL));
  for (std::size_t i = 0; i < options.subsample_rows; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, rows - i));
    std::swap(all[i], all[j]);
  }
  all.resize(options.subsample_rows);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

ClusterModel cluster_nets(const TraceMatrix& trace, std::size_t k, std::uint64_t seed, const ClusterOptions& options) {
  if (k == 0) throw std::invalid_argument("cluster count must be positive");
  std::vector<NetId> live;
  for (std::size_t n = 0; n < trace.nets(); ++n) {
    if (!trace_is_constant(trace, NetId(n))) live.emplace_back(n);
  }
  if (k > live.size()) {
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(live.size()) +
                                " non-constant nets");
  }
  ClusterModel model;
  model.k = k;
  model.seed = seed;
  model.rows_used = choose_rows(trace.rows(), seed, options);
  const DenseMatrix<double> points = trace_points(trace, live, model.rows_used);
  auto fit = kmeans(points, k, seed, options.max_iters);

  model.assignment.assign(trace.nets(), kExcludedNet);
  for (std::size_t j = 0; j < live.size(); ++j) model.assignment[live[j].index()] = fit.assignment[j];
  model.centroids = std::move(fit.centroids);
  model.iterations_run = fit.iterations;
  model.distortion_history = std::move(fit.distortion);
  return model;
}

std::vector<NetScore> score_nets(std::span<const std::size_t> cone_sizes, const ActivityProfile& activity) {
  if (cone_sizes.size() != activity.switching.size()) {
    throw std::invalid_argument("activity profile does not match netlist");
  }
  const std::size_t max_cone = cone_sizes.empty() ? 0 : *std::max_element(cone_sizes.begin(), cone_sizes.end());
  std::vector<NetScore> scores(cone_sizes.size());
  for (std::size_t n = 0; n < cone_sizes.size(); ++n) {
    NetScore& s = scores[n];
    s.net = NetId(n);
    s.sw = activity.switching[n];
    s.fanin_norm = max_cone == 0 ? 0.0 : static_cast<double>(cone_sizes[n]) / static_cast<double>(max_cone);
    s.p = 0.5 * s.sw + 0.5 * s.fanin_norm;
  }
  return scores;
}

std::vector<NetScore> score_nets(const Netlist& netlist, const ActivityProfile& activity) {
  const auto cones = fanin_cone_sizes(netlist);
  return score_nets(cones, activity);
}

SensitiveSet select_sensitive(const ClusterModel& model, std::span<const NetScore> scores, double threshold,
                              std::uint64_t seed) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
  if (scores.size() != model.assignment.size()) throw std::invalid_argument("scores do not match cluster model");
  std::vector<std::vector<NetId>> clusters(model.k);
  for (std::size_t n = 0; n < model.assignment.size(); ++n) {
    if (model.assignment[n] != kExcludedNet) clusters[static_cast<std::size_t>(model.assignment[n])].emplace_back(n);
  }

  SensitiveSet set;
  set.seed = seed;
  set.k = model.k;
  set.threshold = threshold;
  Rng rng(seed);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    auto& members = clusters[c];
    if (members.empty()) {
      set.skipped_clusters.push_back(c);
      continue;
    }
    std::sort(members.begin(), members.end(), [&](NetId a, NetId b) {
      const double pa = scores[a.index()].p;
      const double pb = scores[b.index()].p;
      return pa != pb ? pa > pb : a < b;
    });
    const double raw = std::ceil(threshold * static_cast<double>(members.size()) - 1e-9);
    const std::size_t pool = std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, members.size());
    const NetId pick = members[static_cast<std::size_t>(uniform_below(rng, pool))];
    set.members.push_back(SensitiveNet{pick, c, scores[pick.index()]});
  }
  return set;
}

nlohmann::json to_json(const SensitiveSet& set, const Netlist& netlist) {
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& m : set.members) {
    nets.push_back({{"net", netlist.net_name(m.net)},
                    {"cluster", m.cluster},
                    {"sw", m.score.sw},
                    {"fanin_norm", m.score.fanin_norm},
                    {"p", m.score.p}});
  }
  return {{"version", 1},
          {"circuit", netlist.name()},
          {"k", set.k},
          {"threshold", set.threshold},
          {"seed", set.seed},
          {"skipped_clusters", set.skipped_clusters},
          {"nets", nets}};
}

}  // namespace netmark
