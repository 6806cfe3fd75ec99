#include "netmark/sim.hpp"

#include <array>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "netmark/parallel.hpp"
#include "netmark/rng.hpp"

namespace netmark {

RandomVectorSet generate_vectors(std::size_t width, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("vector count must be positive");
  RandomVectorSet set{seed, width, {}};
  set.vectors.reserve(count);
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Vector v(width);
    auto words = v.words();
    for (std::size_t w = 0; w < words.size(); ++w) words[w] = rng();
    if (width % 64 != 0 && !words.empty()) words.back() &= (std::uint64_t{1} << (width % 64)) - 1;
    set.vectors.push_back(std::move(v));
  }
  return set;
}

RandomVectorSet generate_vectors(const Netlist& netlist, std::size_t count, std::uint64_t seed) {
  return generate_vectors(netlist.input_width(), count, seed);
}

TraceMatrix::TraceMatrix(std::size_t rows, std::size_t nets)
    : rows_(rows), nets_(nets), words_per_column_((rows + 63) / 64), bits_(words_per_column_ * nets, 0) {}

BitVector TraceMatrix::row(std::size_t r) const {
  if (r >= rows_) throw std::out_of_range("trace row " + std::to_string(r) + " out of range");
  BitVector out(nets_);
  for (std::size_t n = 0; n < nets_; ++n) out.set(n, at(r, NetId(n)));
  return out;
}

namespace {

std::uint64_t evaluate_word(const Gate& gate, const std::vector<std::uint64_t>& values) {
  const auto& in = gate.inputs;
  std::uint64_t acc = values[in[0].index()];
  switch (gate.function) {
    case GateFunction::Buf: return acc;
    case GateFunction::Not: return ~acc;
    case GateFunction::And:
    case GateFunction::Nand:
      for (std::size_t i = 1; i < in.size(); ++i) acc &= values[in[i].index()];
      return gate.function == GateFunction::And ? acc : ~acc;
    case GateFunction::Or:
    case GateFunction::Nor:
      for (std::size_t i = 1; i < in.size(); ++i) acc |= values[in[i].index()];
      return gate.function == GateFunction::Or ? acc : ~acc;
    case GateFunction::Xor:
    case GateFunction::Xnor:
      for (std::size_t i = 1; i < in.size(); ++i) acc ^= values[in[i].index()];
      return gate.function == GateFunction::Xor ? acc : ~acc;
  }
  return 0;
}

void check_width(const Netlist& netlist, const Vector& v) {
  if (v.size() != netlist.input_width()) {
    throw std::invalid_argument("vector width " + std::to_string(v.size()) + " does not match " +
                                std::to_string(netlist.input_width()) + " effective inputs");
  }
}

}  // namespace

TraceMatrix simulate(const Netlist& netlist, std::span<const Vector> vectors, SimOptions options) {
  for (const Vector& v : vectors) check_width(netlist, v);
  TraceMatrix trace(vectors.size(), netlist.net_count());
  const std::size_t blocks = trace.words_per_column();
  const auto inputs = netlist.effective_inputs();
  const auto gates = netlist.gates();
  const auto order = netlist.gate_order();

  parallel_for(blocks, options.threads, [&](std::size_t block) {
    std::vector<std::uint64_t> values(netlist.net_count(), 0);
    const std::size_t first = block * 64;
    const std::size_t lanes = std::min<std::size_t>(64, vectors.size() - first);
    for (std::size_t lane = 0; lane < lanes; ++lane) {
      const Vector& v = vectors[first + lane];
      const auto words = v.words();
      for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits) {
          const std::size_t j = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
          values[inputs[j].index()] |= std::uint64_t{1} << lane;
          bits &= bits - 1;
        }
      }
    }
    for (std::uint32_t g : order) values[gates[g].output.index()] = evaluate_word(gates[g], values);

    const std::uint64_t mask = lanes == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << lanes) - 1;
    for (std::size_t n = 0; n < values.size(); ++n) trace.column(NetId(n))[block] = values[n] & mask;
  });
  return trace;
}

TraceMatrix simulate(const Netlist& netlist, const RandomVectorSet& vectors, SimOptions options) {
  return simulate(netlist, std::span<const Vector>(vectors.vectors), options);
}

BitVector simulate_vector(const Netlist& netlist, const Vector& vector) {
  check_width(netlist, vector);
  std::vector<std::uint8_t> value(netlist.net_count(), 0);
  const auto inputs = netlist.effective_inputs();
  for (std::size_t j = 0; j < inputs.size(); ++j) value[inputs[j].index()] = vector.get(j);
  std::size_t max_arity = 1;
  for (const Gate& gate : netlist.gates()) max_arity = std::max(max_arity, gate.inputs.size());
  auto args = std::make_unique<bool[]>(max_arity);
  for (std::uint32_t g : netlist.gate_order()) {
    const Gate& gate = netlist.gates()[g];
    for (std::size_t i = 0; i < gate.inputs.size(); ++i) args[i] = value[gate.inputs[i].index()] != 0;
    value[gate.output.index()] = evaluate(gate.function, std::span<const bool>(args.get(), gate.inputs.size()));
  }
  BitVector row(netlist.net_count());
  for (std::size_t n = 0; n < value.size(); ++n) row.set(n, value[n] != 0);
  return row;
}

BitVector default_row(const Netlist& netlist) { return simulate_vector(netlist, Vector(netlist.input_width())); }

ActivityProfile activity(const TraceMatrix& trace, const BitVector& default_row) {
  if (trace.rows() == 0) throw std::invalid_argument("activity of an empty trace");
  if (default_row.size() != trace.nets()) throw std::invalid_argument("default row width does not match trace");
  ActivityProfile profile;
  profile.switching.resize(trace.nets());
  profile.toggles.resize(trace.nets());
  profile.constant.resize(trace.nets());
  const std::size_t words = trace.words_per_column();
  const std::size_t tail = trace.rows() % 64;
  const std::uint64_t last_mask = tail == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << tail) - 1;
  for (std::size_t n = 0; n < trace.nets(); ++n) {
    const auto col = trace.column(NetId(n));
    std::uint64_t carry = default_row.get(n) ? 1 : 0;
    std::uint32_t flips = 0;
    for (std::size_t w = 0; w < words; ++w) {
      // prev holds row r-1 in bit position r.
      const std::uint64_t prev = (col[w] << 1) | carry;
      std::uint64_t diff = col[w] ^ prev;
      if (w + 1 == words) diff &= last_mask;
      flips += static_cast<std::uint32_t>(std::popcount(diff));
      carry = col[w] >> 63;
    }
    profile.toggles[n] = flips;
    profile.switching[n] = static_cast<double>(flips) / static_cast<double>(trace.rows());
    profile.constant[n] = flips == 0;
  }
  return profile;
}

std::vector<NetId> toggled_nets(const TraceMatrix& trace, const BitVector& default_row,
                                std::optional<std::size_t> row_a, std::size_t row_b,
                                std::span<const NetId> nets) {
  if (row_b >= trace.rows() || (row_a && *row_a >= trace.rows())) {
    throw std::out_of_range("trace row index out of range");
  }
  std::vector<NetId> out;
  for (NetId n : nets) {
    if (n.index() >= trace.nets()) throw std::out_of_range("net handle out of range for trace");
    const bool a = row_a ? trace.at(*row_a, n) : default_row.get(n.index());
    if (a != trace.at(row_b, n)) out.push_back(n);
  }
  return out;
}

namespace {

constexpr std::array<char, 8> kTraceMagic = {'N', 'M', 'T', 'R', 'A', 'C', 'E', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("truncated trace header");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

void write_trace(std::ostream& out, const TraceMatrix& trace) {
  out.write(kTraceMagic.data(), kTraceMagic.size());
  put_u64(out, trace.nets());
  put_u64(out, trace.rows());
  std::vector<char> record((trace.nets() + 7) / 8);
  for (std::size_t r = 0; r < trace.rows(); ++r) {
    std::fill(record.begin(), record.end(), 0);
    for (std::size_t n = 0; n < trace.nets(); ++n) {
      if (trace.at(r, NetId(n))) record[n / 8] = static_cast<char>(record[n / 8] | (1 << (n % 8)));
    }
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
}

TraceMatrix read_trace(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kTraceMagic) throw std::runtime_error("not a trace file (bad magic)");
  const std::uint64_t nets = get_u64(in);
  const std::uint64_t rows = get_u64(in);
  TraceMatrix trace(rows, nets);
  std::vector<char> record((nets + 7) / 8);
  for (std::size_t r = 0; r < rows; ++r) {
    in.read(record.data(), static_cast<std::streamsize>(record.size()));
    if (!in) throw std::runtime_error("truncated trace body");
    for (std::size_t n = 0; n < nets; ++n) {
      if ((static_cast<unsigned char>(record[n / 8]) >> (n % 8)) & 1U) {
        trace.column(NetId(n))[r >> 6] |= std::uint64_t{1} << (r & 63);
      }
    }
  }
  return trace;
}

}  // namespace netmark
