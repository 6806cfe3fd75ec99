#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "netmark/netlist.hpp"
#include "netmark/sim.hpp"

namespace netmark::oracle {

inline std::filesystem::path corpus_dir() { return NETMARK_BENCH_DIR; }
inline std::filesystem::path data_dir() { return NETMARK_TEST_DATA_DIR; }

inline std::vector<std::filesystem::path> corpus_paths() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(corpus_dir())) {
    if (e.path().extension() == ".bench") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<Netlist> corpus() {
  std::vector<Netlist> out;
  for (const auto& p : corpus_paths()) out.push_back(read_bench_file(p));
  return out;
}

// 19 nets: five inputs N1..N5, fourteen gates N6..N19.
inline constexpr const char* kFigureCircuit = R"(INPUT(N1)
INPUT(N2)
INPUT(N3)
INPUT(N4)
INPUT(N5)
OUTPUT(N16)
OUTPUT(N19)
N6 = NAND(N1, N3)
N7 = NAND(N3, N4)
N8 = NOR(N2, N5)
N9 = NAND(N2, N7)
N10 = AND(N6, N9)
N11 = OR(N7, N8)
N12 = XOR(N10, N11)
N13 = NOT(N8)
N14 = AND(N12, N13)
N15 = NAND(N11, N4)
N16 = OR(N14, N15)
N17 = XNOR(N16, N5)
N18 = NOR(N9, N15)
N19 = AND(N17, N18)
)";

inline constexpr const char* kAndCircuit = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n";

inline Vector make_vector(std::initializer_list<int> bits) {
  Vector v(bits.size());
  std::size_t i = 0;
  for (int b : bits) v.set(i++, b != 0);
  return v;
}

inline Vector vector_from_index(std::size_t width, std::uint64_t index) {
  Vector v(width);
  for (std::size_t j = 0; j < width; ++j) v.set(j, (index >> j) & 1U);
  return v;
}

/// Recursive, memoized evaluation by net name. Shares nothing with the
/// simulator beyond the parsed gate list.
inline std::vector<int> interpret(const Netlist& n, const Vector& v) {
  const auto& parts = n.parts();
  std::unordered_map<std::string, const Gate*> driver;
  for (const Gate& g : parts.gates) driver.emplace(parts.net_names[g.output.index()], &g);
  std::unordered_map<std::string, int> value;
  for (std::size_t j = 0; j < n.input_width(); ++j) value[n.net_name(n.effective_inputs()[j])] = v.get(j);

  std::function<int(const std::string&)> eval = [&](const std::string& name) -> int {
    if (auto it = value.find(name); it != value.end()) return it->second;
    const Gate& g = *driver.at(name);
    int ones = 0;
    std::vector<int> in;
    for (NetId i : g.inputs) {
      in.push_back(eval(parts.net_names[i.index()]));
      ones += in.back();
    }
    const int all = ones == static_cast<int>(in.size());
    const int any = ones > 0;
    int out = 0;
    switch (g.function) {
      case GateFunction::And: out = all; break;
      case GateFunction::Nand: out = !all; break;
      case GateFunction::Or: out = any; break;
      case GateFunction::Nor: out = !any; break;
      case GateFunction::Xor: out = ones % 2; break;
      case GateFunction::Xnor: out = !(ones % 2); break;
      case GateFunction::Not: out = !in[0]; break;
      case GateFunction::Buf: out = in[0]; break;
    }
    value[name] = out;
    return out;
  };

  std::vector<int> out(n.net_count());
  for (std::size_t i = 0; i < n.net_count(); ++i) out[i] = eval(parts.net_names[i]);
  return out;
}

/// Switching activity by a plain loop over rows.
inline double scalar_switching(const TraceMatrix& t, const BitVector& default_row, NetId net) {
  if (t.rows() == 0) return 0.0;
  int prev = default_row.get(net.index());
  std::size_t flips = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const int cur = t.at(r, net);
    flips += cur != prev;
    prev = cur;
  }
  return static_cast<double>(flips) / static_cast<double>(t.rows());
}

/// Gates reachable backwards from `net` by depth-first search over names.
inline std::size_t brute_cone(const Netlist& n, NetId net) {
  std::vector<bool> seen(n.net_count(), false);
  std::size_t count = 0;
  std::vector<NetId> stack{net};
  while (!stack.empty()) {
    NetId cur = stack.back();
    stack.pop_back();
    for (const Gate& g : n.gates()) {
      if (g.output != cur || seen[cur.index()]) continue;
      seen[cur.index()] = true;
      ++count;
      for (NetId in : g.inputs) stack.push_back(in);
    }
  }
  return count;
}

struct Partition {
  std::vector<int> labels;
  double cost = std::numeric_limits<double>::infinity();
};

/// Minimum within-cluster sum of squares over every 2-partition of the columns.
inline Partition best_two_partition(const std::vector<std::vector<double>>& columns) {
  Partition best;
  const std::size_t n = columns.size();
  const std::size_t dims = columns.front().size();
  for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << n); ++mask) {
    double cost = 0;
    for (int side = 0; side < 2; ++side) {
      std::vector<double> mean(dims, 0.0);
      std::size_t size = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>((mask >> i) & 1U) != side) continue;
        ++size;
        for (std::size_t d = 0; d < dims; ++d) mean[d] += columns[i][d];
      }
      for (double& m : mean) m /= static_cast<double>(size);
      for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<int>((mask >> i) & 1U) != side) continue;
        for (std::size_t d = 0; d < dims; ++d) cost += (columns[i][d] - mean[d]) * (columns[i][d] - mean[d]);
      }
    }
    if (cost < best.cost - 1e-12) {
      best.cost = cost;
      best.labels.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) best.labels[i] = static_cast<int>((mask >> i) & 1U);
    }
  }
  return best;
}

}  // namespace netmark::oracle
