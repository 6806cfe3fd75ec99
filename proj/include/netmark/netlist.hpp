#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace netmark {

/// Dense handle of one net (wire). Valid handles are 0..net_count-1.
struct NetId {
  std::uint32_t value = 0;

  constexpr NetId() = default;
  constexpr explicit NetId(std::uint32_t v) : value(v) {}
  constexpr explicit NetId(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr std::size_t index() const { return value; }

  friend constexpr auto operator<=>(NetId, NetId) = default;
};

enum class GateFunction : std::uint8_t { And, Nand, Or, Nor, Xor, Xnor, Not, Buf };

inline constexpr GateFunction kAllGateFunctions[] = {
    GateFunction::And, GateFunction::Nand, GateFunction::Or,  GateFunction::Nor,
    GateFunction::Xor, GateFunction::Xnor, GateFunction::Not, GateFunction::Buf};

/// `.bench` token for a function (BUF is written as BUFF).
std::string_view bench_token(GateFunction f);
/// Case-insensitive; accepts BUF and BUFF. DFF is not a gate function.
std::optional<GateFunction> parse_gate_function(std::string_view token);
bool is_unary(GateFunction f);
bool arity_ok(GateFunction f, std::size_t arity);

/// Scalar truth-table evaluation.
bool evaluate(GateFunction f, std::span<const bool> inputs);

struct Gate {
  NetId output;
  GateFunction function = GateFunction::Buf;
  std::vector<NetId> inputs;

  friend bool operator==(const Gate&, const Gate&) = default;
};

/// Full-scan boundary: `q` behaves as a pseudo primary input, `d` as a pseudo
/// primary output.
struct StateElement {
  NetId d;
  NetId q;

  friend bool operator==(const StateElement&, const StateElement&) = default;
};

class NetlistError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public NetlistError {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class CycleError : public NetlistError {
 public:
  CycleError(std::string net_on_cycle);
  const std::string& net_on_cycle() const { return net_; }

 private:
  std::string net_;
};

/// Raw, unvalidated netlist contents. Transformations copy these out of a
/// Netlist, edit them and construct a new Netlist.
struct NetlistParts {
  std::string name;
  std::vector<std::string> net_names;
  std::vector<NetId> primary_inputs;
  std::vector<NetId> primary_outputs;
  std::vector<Gate> gates;
  std::vector<StateElement> state_elements;

  NetId add_net(std::string net_name);
};

enum class DriverKind : std::uint8_t { PrimaryInput, Gate, StateOutput };

struct Driver {
  DriverKind kind;
  std::uint32_t index;  // into primary_inputs, gates or state_elements
};

/// Validated, immutable gate-level netlist.
///
/// Construction checks: unique net names, in-range handles, gate arity, one
/// driver per net, and acyclicity once state elements are cut.
class Netlist {
 public:
  explicit Netlist(NetlistParts parts);

  const std::string& name() const { return parts_.name; }
  std::size_t net_count() const { return parts_.net_names.size(); }
  std::size_t gate_count() const { return parts_.gates.size(); }

  const std::string& net_name(NetId id) const;
  std::optional<NetId> find_net(std::string_view name) const;
  /// Throws NetlistError when `id` is out of range.
  void check(NetId id) const;

  std::span<const NetId> primary_inputs() const { return parts_.primary_inputs; }
  std::span<const NetId> primary_outputs() const { return parts_.primary_outputs; }
  std::span<const Gate> gates() const { return parts_.gates; }
  std::span<const StateElement> state_elements() const { return parts_.state_elements; }

  /// Primary inputs followed by state-element Q nets.
  std::span<const NetId> effective_inputs() const { return effective_inputs_; }
  /// Primary outputs followed by state-element D nets.
  std::span<const NetId> effective_outputs() const { return effective_outputs_; }
  std::size_t input_width() const { return effective_inputs_.size(); }

  Driver driver(NetId id) const;
  /// Gate indices in topological order.
  std::span<const std::uint32_t> gate_order() const { return gate_order_; }
  /// Indices of gates that read `id`.
  std::span<const std::uint32_t> readers(NetId id) const;

  const NetlistParts& parts() const { return parts_; }

 private:
  NetlistParts parts_;
  std::unordered_map<std::string, NetId> by_name_;
  std::vector<Driver> drivers_;
  std::vector<NetId> effective_inputs_;
  std::vector<NetId> effective_outputs_;
  std::vector<std::uint32_t> gate_order_;
  std::vector<std::uint32_t> reader_offsets_;
  std::vector<std::uint32_t> reader_gates_;
};

/// Parses ISCAS `.bench` text. Net order is the order of first appearance.
Netlist parse_bench(std::string_view text, std::string name = {});
Netlist read_bench_file(const std::filesystem::path& path);
/// Writes `.bench` text; the netlist name becomes a leading `#` comment when
/// `include_name` is set.
std::string serialize_bench(const Netlist& netlist, bool include_name = true);
void write_bench_file(const Netlist& netlist, const std::filesystem::path& path);

/// Topological order over all nets: effective inputs first, then gate outputs.
std::vector<NetId> levelize(const Netlist& netlist);
/// Gate indices in topological order; throws CycleError.
std::vector<std::uint32_t> topological_gate_order(const NetlistParts& parts);

/// Number of distinct gates in the transitive fan-in of `net`, stopping at
/// effective inputs.
std::size_t fanin_cone_size(const Netlist& netlist, NetId net);
std::vector<std::size_t> fanin_cone_sizes(const Netlist& netlist);

/// Marks every net reachable forward from `net` through gates (including
/// `net`). State elements are cut.
std::vector<bool> transitive_fanout(const Netlist& netlist, NetId net);

/// Equality by names: same interface lists, same state elements, and the same
/// driving function and input names for every gate regardless of gate order.
bool structurally_equal(const Netlist& a, const Netlist& b);

}  // namespace netmark

template <>
struct std::hash<netmark::NetId> {
  std::size_t operator()(netmark::NetId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
