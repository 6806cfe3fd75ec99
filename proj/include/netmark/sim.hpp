#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "netmark/netlist.hpp"

namespace netmark {

/// Fixed-width bit string packed LSB-first into 64-bit words.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t width) : width_(width), words_((width + 63) / 64, 0) {}

  std::size_t size() const { return width_; }
  bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool v) {
    const std::uint64_t m = std::uint64_t{1} << (i & 63);
    words_[i >> 6] = v ? (words_[i >> 6] | m) : (words_[i >> 6] & ~m);
  }
  std::size_t popcount() const {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  friend bool operator==(const BitVector&, const BitVector&) = default;
  friend auto operator<=>(const BitVector&, const BitVector&) = default;

 private:
  std::size_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

/// One assignment to every effective input (primary inputs, then scan Q nets).
using Vector = BitVector;

struct RandomVectorSet {
  std::uint64_t seed = 0;
  std::size_t width = 0;
  std::vector<Vector> vectors;

  std::size_t size() const { return vectors.size(); }
};

/// Draws `count` vectors from mt19937_64(seed): each vector consumes
/// ceil(width / 64) raw outputs, input j taking bit (j % 64) of output j / 64.
RandomVectorSet generate_vectors(std::size_t width, std::size_t count, std::uint64_t seed);
RandomVectorSet generate_vectors(const Netlist& netlist, std::size_t count, std::uint64_t seed);

/// Per-net Boolean values over a vector sequence. Rows are vectors, columns
/// are nets; storage is column-major with each column packed 64 rows per word.
class TraceMatrix {
 public:
  TraceMatrix() = default;
  TraceMatrix(std::size_t rows, std::size_t nets);

  std::size_t rows() const { return rows_; }
  std::size_t nets() const { return nets_; }
  std::size_t words_per_column() const { return words_per_column_; }

  bool at(std::size_t row, NetId net) const {
    return (column(net)[row >> 6] >> (row & 63)) & 1U;
  }
  /// Packed column of one net; bits past rows() are zero.
  std::span<const std::uint64_t> column(NetId net) const {
    return std::span<const std::uint64_t>(bits_).subspan(net.index() * words_per_column_, words_per_column_);
  }
  std::span<std::uint64_t> column(NetId net) {
    return std::span<std::uint64_t>(bits_).subspan(net.index() * words_per_column_, words_per_column_);
  }
  /// Values of all nets under vector `row`.
  BitVector row(std::size_t row) const;

  friend bool operator==(const TraceMatrix&, const TraceMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t nets_ = 0;
  std::size_t words_per_column_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct SimOptions {
  /// Worker threads over 64-vector blocks; 0 = hardware concurrency.
  std::size_t threads = 1;
};

/// Bit-parallel simulation, 64 vectors per machine word, in levelized order.
TraceMatrix simulate(const Netlist& netlist, std::span<const Vector> vectors, SimOptions options = {});
TraceMatrix simulate(const Netlist& netlist, const RandomVectorSet& vectors, SimOptions options = {});

/// Scalar reference evaluation of one vector; returns one bit per net.
BitVector simulate_vector(const Netlist& netlist, const Vector& vector);

/// Row of the all-zeros input vector, the baseline before the first vector.
BitVector default_row(const Netlist& netlist);

struct ActivityProfile {
  /// Fraction of the rows.size() transitions (default->0, 0->1, ...) in which
  /// the net flips.
  std::vector<double> switching;
  std::vector<std::uint32_t> toggles;
  /// True iff the net never flips (switching == 0).
  std::vector<bool> constant;
};

ActivityProfile activity(const TraceMatrix& trace, const BitVector& default_row);

/// Subset of `nets` whose value differs between row_a (nullopt = default row)
/// and row_b.
std::vector<NetId> toggled_nets(const TraceMatrix& trace, const BitVector& default_row,
                                std::optional<std::size_t> row_a, std::size_t row_b,
                                std::span<const NetId> nets);

/// Binary trace dump:
///   bytes 0..7   magic "NMTRACE1"
///   bytes 8..15  net count, uint64 little-endian
///   bytes 16..23 vector count, uint64 little-endian
///   then one record per vector (row-major), ceil(nets / 8) bytes each;
///   net j is bit (j % 8) of byte j / 8, least significant bit first.
void write_trace(std::ostream& out, const TraceMatrix& trace);
TraceMatrix read_trace(std::istream& in);

}  // namespace netmark
