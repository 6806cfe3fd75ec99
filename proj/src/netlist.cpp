#include "netmark/netlist.hpp"

#include <algorithm>

namespace netmark {

std::string_view bench_token(GateFunction f) {
  switch (f) {
    case GateFunction::And: return "AND";
    case GateFunction::Nand: return "NAND";
    case GateFunction::Or: return "OR";
    case GateFunction::Nor: return "NOR";
    case GateFunction::Xor: return "XOR";
    case GateFunction::Xnor: return "XNOR";
    case GateFunction::Not: return "NOT";
    case GateFunction::Buf: return "BUFF";
  }
  return "?";
}

std::optional<GateFunction> parse_gate_function(std::string_view token) {
  std::string upper(token);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "BUF") return GateFunction::Buf;
  for (GateFunction f : kAllGateFunctions) {
    if (bench_token(f) == upper) return f;
  }
  return std::nullopt;
}

bool is_unary(GateFunction f) { return f == GateFunction::Not || f == GateFunction::Buf; }

bool arity_ok(GateFunction f, std::size_t arity) { return is_unary(f) ? arity == 1 : arity >= 2; }

bool evaluate(GateFunction f, std::span<const bool> inputs) {
  switch (f) {
    case GateFunction::Buf: return inputs[0];
    case GateFunction::Not: return !inputs[0];
    case GateFunction::And:
    case GateFunction::Nand: {
      bool v = std::all_of(inputs.begin(), inputs.end(), [](bool b) { return b; });
      return f == GateFunction::And ? v : !v;
    }
    case GateFunction::Or:
    case GateFunction::Nor: {
      bool v = std::any_of(inputs.begin(), inputs.end(), [](bool b) { return b; });
      return f == GateFunction::Or ? v : !v;
    }
    case GateFunction::Xor:
    case GateFunction::Xnor: {
      bool v = false;
      for (bool b : inputs) v ^= b;
      return f == GateFunction::Xor ? v : !v;
    }
  }
  return false;
}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
    : NetlistError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

CycleError::CycleError(std::string net_on_cycle)
    : NetlistError("combinational cycle through net '" + net_on_cycle + "'"), net_(std::move(net_on_cycle)) {}

NetId NetlistParts::add_net(std::string net_name) {
  net_names.push_back(std::move(net_name));
  return NetId(net_names.size() - 1);
}

namespace {

constexpr std::uint32_t kNoDriver = UINT32_MAX;

struct DriverTable {
  std::vector<DriverKind> kind;
  std::vector<std::uint32_t> index;
};

void check_range(const NetlistParts& parts, NetId id, const char* where) {
  if (id.index() >= parts.net_names.size()) {
    throw NetlistError(std::string("net handle ") + std::to_string(id.value) + " out of range in " + where);
  }
}

DriverTable build_drivers(const NetlistParts& parts) {
  const std::size_t n = parts.net_names.size();
  DriverTable t{std::vector<DriverKind>(n, DriverKind::PrimaryInput), std::vector<std::uint32_t>(n, kNoDriver)};
  auto claim = [&](NetId id, DriverKind kind, std::size_t index) {
    if (t.index[id.index()] != kNoDriver) {
      throw NetlistError("net '" + parts.net_names[id.index()] + "' is multiply driven");
    }
    t.kind[id.index()] = kind;
    t.index[id.index()] = static_cast<std::uint32_t>(index);
  };
  for (std::size_t i = 0; i < parts.primary_inputs.size(); ++i) {
    check_range(parts, parts.primary_inputs[i], "primary inputs");
    claim(parts.primary_inputs[i], DriverKind::PrimaryInput, i);
  }
  for (std::size_t i = 0; i < parts.state_elements.size(); ++i) {
    check_range(parts, parts.state_elements[i].q, "state elements");
    check_range(parts, parts.state_elements[i].d, "state elements");
    claim(parts.state_elements[i].q, DriverKind::StateOutput, i);
  }
  for (std::size_t i = 0; i < parts.gates.size(); ++i) {
    const Gate& g = parts.gates[i];
    check_range(parts, g.output, "gate outputs");
    for (NetId in : g.inputs) check_range(parts, in, "gate inputs");
    if (!arity_ok(g.function, g.inputs.size())) {
      throw NetlistError("gate '" + parts.net_names[g.output.index()] + "' has invalid arity " +
                         std::to_string(g.inputs.size()) + " for " + std::string(bench_token(g.function)));
    }
    if (t.index[g.output.index()] != kNoDriver && t.kind[g.output.index()] == DriverKind::PrimaryInput) {
      throw NetlistError("gate output '" + parts.net_names[g.output.index()] + "' is a primary input");
    }
    claim(g.output, DriverKind::Gate, i);
  }
  for (NetId po : parts.primary_outputs) check_range(parts, po, "primary outputs");

  std::vector<std::string> undriven;
  for (std::size_t i = 0; i < n; ++i) {
    if (t.index[i] == kNoDriver) undriven.push_back(parts.net_names[i]);
  }
  if (!undriven.empty()) {
    std::string msg = "undriven nets: ";
    for (std::size_t i = 0; i < undriven.size(); ++i) msg += (i ? ", " : "") + undriven[i];
    throw NetlistError(msg);
  }
  return t;
}

}  // namespace

std::vector<std::uint32_t> topological_gate_order(const NetlistParts& parts) {
  const std::size_t n = parts.net_names.size();
  std::vector<std::int64_t> gate_of(n, -1);
  for (std::size_t i = 0; i < parts.gates.size(); ++i) gate_of[parts.gates[i].output.index()] = static_cast<std::int64_t>(i);

  // Kahn over gates; pending[i] counts inputs still driven by unplaced gates.
  std::vector<std::uint32_t> pending(parts.gates.size(), 0);
  std::vector<std::vector<std::uint32_t>> readers(n);
  for (std::size_t i = 0; i < parts.gates.size(); ++i) {
    for (NetId in : parts.gates[i].inputs) {
      if (gate_of[in.index()] >= 0) ++pending[i];
      readers[in.index()].push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::vector<std::uint32_t> order;
  order.reserve(parts.gates.size());
  for (std::size_t i = 0; i < parts.gates.size(); ++i) {
    if (pending[i] == 0) order.push_back(static_cast<std::uint32_t>(i));
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    const Gate& g = parts.gates[order[head]];
    for (std::uint32_t r : readers[g.output.index()]) {
      if (--pending[r] == 0) order.push_back(r);
    }
  }
  if (order.size() == parts.gates.size()) return order;

  // Walk backwards through unplaced gates until a net repeats; it lies on a cycle.
  std::size_t start = 0;
  while (pending[start] == 0) ++start;
  std::vector<bool> seen(n, false);
  std::size_t gate = start;
  for (;;) {
    NetId out = parts.gates[gate].output;
    if (seen[out.index()]) throw CycleError(parts.net_names[out.index()]);
    seen[out.index()] = true;
    for (NetId in : parts.gates[gate].inputs) {
      std::int64_t src = gate_of[in.index()];
      if (src >= 0 && pending[static_cast<std::size_t>(src)] > 0) {
        gate = static_cast<std::size_t>(src);
        break;
      }
    }
  }
}

Netlist::Netlist(NetlistParts parts) : parts_(std::move(parts)) {
  by_name_.reserve(parts_.net_names.size());
  for (std::size_t i = 0; i < parts_.net_names.size(); ++i) {
    const std::string& nm = parts_.net_names[i];
    if (nm.empty()) throw NetlistError("empty net name at handle " + std::to_string(i));
    if (!by_name_.emplace(nm, NetId(i)).second) throw NetlistError("duplicate net name '" + nm + "'");
  }
  DriverTable table = build_drivers(parts_);
  drivers_.resize(parts_.net_names.size());
  for (std::size_t i = 0; i < drivers_.size(); ++i) drivers_[i] = Driver{table.kind[i], table.index[i]};

  gate_order_ = topological_gate_order(parts_);

  effective_inputs_ = parts_.primary_inputs;
  effective_outputs_ = parts_.primary_outputs;
  for (const StateElement& s : parts_.state_elements) {
    effective_inputs_.push_back(s.q);
    effective_outputs_.push_back(s.d);
  }

  reader_offsets_.assign(parts_.net_names.size() + 1, 0);
  for (const Gate& g : parts_.gates) {
    for (NetId in : g.inputs) ++reader_offsets_[in.index() + 1];
  }
  for (std::size_t i = 1; i < reader_offsets_.size(); ++i) reader_offsets_[i] += reader_offsets_[i - 1];
  reader_gates_.resize(reader_offsets_.back());
  std::vector<std::uint32_t> fill(reader_offsets_.begin(), reader_offsets_.end() - 1);
  for (std::size_t i = 0; i < parts_.gates.size(); ++i) {
    for (NetId in : parts_.gates[i].inputs) reader_gates_[fill[in.index()]++] = static_cast<std::uint32_t>(i);
  }
}

void Netlist::check(NetId id) const {
  if (id.index() >= net_count()) {
    throw NetlistError("invalid net handle " + std::to_string(id.value) + " (net count " +
                       std::to_string(net_count()) + ")");
  }
}

const std::string& Netlist::net_name(NetId id) const {
  check(id);
  return parts_.net_names[id.index()];
}

std::optional<NetId> Netlist::find_net(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

Driver Netlist::driver(NetId id) const {
  check(id);
  return drivers_[id.index()];
}

std::span<const std::uint32_t> Netlist::readers(NetId id) const {
  check(id);
  return std::span<const std::uint32_t>(reader_gates_).subspan(
      reader_offsets_[id.index()], reader_offsets_[id.index() + 1] - reader_offsets_[id.index()]);
}

std::vector<NetId> levelize(const Netlist& netlist) {
  std::vector<NetId> order(netlist.effective_inputs().begin(), netlist.effective_inputs().end());
  order.reserve(netlist.net_count());
  for (std::uint32_t g : netlist.gate_order()) order.push_back(netlist.gates()[g].output);
  return order;
}

std::size_t fanin_cone_size(const Netlist& netlist, NetId net) {
  netlist.check(net);
  std::vector<bool> seen(netlist.net_count(), false);
  std::vector<NetId> stack{net};
  seen[net.index()] = true;
  std::size_t count = 0;
  while (!stack.empty()) {
    NetId cur = stack.back();
    stack.pop_back();
    Driver d = netlist.driver(cur);
    if (d.kind != DriverKind::Gate) continue;
    ++count;
    for (NetId in : netlist.gates()[d.index].inputs) {
      if (!seen[in.index()]) {
        seen[in.index()] = true;
        stack.push_back(in);
      }
    }
  }
  return count;
}

std::vector<std::size_t> fanin_cone_sizes(const Netlist& netlist) {
  const std::size_t n = netlist.net_count();
  std::vector<std::size_t> sizes(n, 0);
  std::vector<std::uint32_t> stamp(n, 0);
  std::vector<NetId> stack;
  for (std::size_t i = 0; i < n; ++i) {
    const auto mark = static_cast<std::uint32_t>(i + 1);
    std::size_t count = 0;
    stack.assign(1, NetId(i));
    stamp[i] = mark;
    while (!stack.empty()) {
      NetId cur = stack.back();
      stack.pop_back();
      Driver d = netlist.driver(cur);
      if (d.kind != DriverKind::Gate) continue;
      ++count;
      for (NetId in : netlist.gates()[d.index].inputs) {
        if (stamp[in.index()] != mark) {
          stamp[in.index()] = mark;
          stack.push_back(in);
        }
      }
    }
    sizes[i] = count;
  }
  return sizes;
}

std::vector<bool> transitive_fanout(const Netlist& netlist, NetId net) {
  netlist.check(net);
  std::vector<bool> reached(netlist.net_count(), false);
  std::vector<NetId> stack{net};
  reached[net.index()] = true;
  while (!stack.empty()) {
    NetId cur = stack.back();
    stack.pop_back();
    for (std::uint32_t g : netlist.readers(cur)) {
      NetId out = netlist.gates()[g].output;
      if (!reached[out.index()]) {
        reached[out.index()] = true;
        stack.push_back(out);
      }
    }
  }
  return reached;
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
  auto names = [](const Netlist& n, std::span<const NetId> ids) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (NetId id : ids) out.push_back(n.net_name(id));
    return out;
  };
  if (names(a, a.primary_inputs()) != names(b, b.primary_inputs())) return false;
  if (names(a, a.primary_outputs()) != names(b, b.primary_outputs())) return false;
  if (a.gate_count() != b.gate_count() || a.net_count() != b.net_count()) return false;
  if (a.state_elements().size() != b.state_elements().size()) return false;
  for (std::size_t i = 0; i < a.state_elements().size(); ++i) {
    const auto& sa = a.state_elements()[i];
    const auto& sb = b.state_elements()[i];
    if (a.net_name(sa.d) != b.net_name(sb.d) || a.net_name(sa.q) != b.net_name(sb.q)) return false;
  }
  for (const Gate& ga : a.gates()) {
    auto out_b = b.find_net(a.net_name(ga.output));
    if (!out_b) return false;
    Driver d = b.driver(*out_b);
    if (d.kind != DriverKind::Gate) return false;
    const Gate& gb = b.gates()[d.index];
    if (ga.function != gb.function || ga.inputs.size() != gb.inputs.size()) return false;
    for (std::size_t i = 0; i < ga.inputs.size(); ++i) {
      if (a.net_name(ga.inputs[i]) != b.net_name(gb.inputs[i])) return false;
    }
  }
  return true;
}

}  // namespace netmark
