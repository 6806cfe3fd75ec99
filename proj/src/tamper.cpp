#include "netmark/tamper.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>
#include <ostream>
#include <set>
#include <unordered_set>

#include "netmark/rng.hpp"
#include "netmark/sim.hpp"
#include "netmark/watermark.hpp"

namespace netmark {

std::string_view to_string(MutationKind kind) {
  switch (kind) {
    case MutationKind::GateTypeSubstitution: return "substitution";
    case MutationKind::GateInsertion: return "insertion";
    case MutationKind::GateRemoval: return "removal";
    case MutationKind::WireSwap: return "swap";
  }
  return "?";
}

std::optional<MutationKind> parse_mutation_kind(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "substitution" || t == "gate_type_substitution") return MutationKind::GateTypeSubstitution;
  if (t == "insertion" || t == "gate_insertion") return MutationKind::GateInsertion;
  if (t == "removal" || t == "gate_removal") return MutationKind::GateRemoval;
  if (t == "swap" || t == "wire_swap") return MutationKind::WireSwap;
  return std::nullopt;
}

std::vector<MutationKind> parse_mutation_kinds(std::string_view text) {
  if (text == "mixed") return {std::begin(kAllMutationKinds), std::end(kAllMutationKinds)};
  std::vector<MutationKind> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto kind = parse_mutation_kind(text.substr(start, end - start));
    if (!kind) throw std::invalid_argument("unknown mutation kind '" + std::string(text.substr(start, end - start)) + "'");
    out.push_back(*kind);
    start = end + 1;
  }
  return out;
}

std::string kinds_label(std::span<const MutationKind> kinds) {
  std::vector<MutationKind> sorted(kinds.begin(), kinds.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() == std::size(kAllMutationKinds)) return "mixed";
  std::string label;
  for (std::size_t i = 0; i < sorted.size(); ++i) label += (i ? "+" : "") + std::string(to_string(sorted[i]));
  return label;
}

namespace {

// Editable netlist with reader lists kept in sync for cycle checks.
class MutableNetlist {
 public:
  explicit MutableNetlist(const Netlist& base) : parts_(base.parts()), readers_(parts_.net_names.size()) {
    driver_gate_.assign(parts_.net_names.size(), -1);
    for (std::size_t g = 0; g < parts_.gates.size(); ++g) {
      driver_gate_[parts_.gates[g].output.index()] = static_cast<std::int64_t>(g);
      for (NetId in : parts_.gates[g].inputs) readers_[in.index()].push_back(static_cast<std::uint32_t>(g));
    }
    for (const auto& name : parts_.net_names) names_.insert(name);
  }

  NetlistParts& parts() { return parts_; }
  std::int64_t driver_gate(NetId n) const { return driver_gate_[n.index()]; }

  std::vector<bool> fanout(NetId from) const {
    std::vector<bool> reached(parts_.net_names.size(), false);
    std::vector<NetId> stack{from};
    reached[from.index()] = true;
    while (!stack.empty()) {
      NetId cur = stack.back();
      stack.pop_back();
      for (std::uint32_t g : readers_[cur.index()]) {
        NetId out = parts_.gates[g].output;
        if (!reached[out.index()]) {
          reached[out.index()] = true;
          stack.push_back(out);
        }
      }
    }
    return reached;
  }

  void set_inputs(std::size_t gate, std::vector<NetId> inputs) {
    for (NetId in : parts_.gates[gate].inputs) {
      auto& r = readers_[in.index()];
      r.erase(std::remove(r.begin(), r.end(), static_cast<std::uint32_t>(gate)), r.end());
    }
    parts_.gates[gate].inputs = std::move(inputs);
    for (NetId in : parts_.gates[gate].inputs) readers_[in.index()].push_back(static_cast<std::uint32_t>(gate));
  }

  NetId add_net(const std::string& stem) {
    std::string name = stem;
    for (std::size_t k = 1; names_.contains(name); ++k) name = stem + "_" + std::to_string(k);
    names_.insert(name);
    readers_.emplace_back();
    driver_gate_.push_back(-1);
    return parts_.add_net(name);
  }

  std::size_t add_gate(Gate gate) {
    const std::size_t idx = parts_.gates.size();
    driver_gate_[gate.output.index()] = static_cast<std::int64_t>(idx);
    for (NetId in : gate.inputs) readers_[in.index()].push_back(static_cast<std::uint32_t>(idx));
    parts_.gates.push_back(std::move(gate));
    return idx;
  }

  void retarget_output(std::size_t gate, NetId out) {
    parts_.gates[gate].output = out;
    driver_gate_[out.index()] = static_cast<std::int64_t>(gate);
  }

  std::string describe(std::size_t gate) const {
    const Gate& g = parts_.gates[gate];
    std::string s = std::string(bench_token(g.function)) + "(";
    for (std::size_t i = 0; i < g.inputs.size(); ++i) s += (i ? ", " : "") + parts_.net_names[g.inputs[i].index()];
    return s + ")";
  }
  const std::string& name(NetId n) const { return parts_.net_names[n.index()]; }

 private:
  NetlistParts parts_;
  std::vector<std::vector<std::uint32_t>> readers_;
  std::vector<std::int64_t> driver_gate_;
  std::unordered_set<std::string> names_;
};

constexpr GateFunction kBinaryFunctions[] = {GateFunction::And, GateFunction::Nand, GateFunction::Or,
                                             GateFunction::Nor, GateFunction::Xor,  GateFunction::Xnor};

class Mutator {
 public:
  Mutator(const Netlist& base, const MutationSpec& spec)
      : net_(base), spec_(spec), rng_(spec.seed), protected_(base.net_count(), false) {
    for (NetId n : spec.protected_nets) {
      base.check(n);
      protected_[n.index()] = true;
    }
  }

  MutationRecord run() {
    MutationRecord record;
    for (std::size_t e = 0; e < spec_.magnitude; ++e) {
      std::optional<MutationEdit> edit;
      for (std::size_t attempt = 0; attempt < spec_.max_retries && !edit; ++attempt) {
        const MutationKind kind = spec_.kinds[uniform_below(rng_, spec_.kinds.size())];
        edit = apply(kind);
      }
      if (!edit) {
        throw MutationError("edit " + std::to_string(e + 1) + " of " + std::to_string(spec_.magnitude) +
                            ": no eligible target after " + std::to_string(spec_.max_retries) + " attempts");
      }
      record.total_gates_changed += edit->gates_changed;
      record.edits.push_back(std::move(*edit));
    }
    return record;
  }

  NetlistParts take() { return std::move(net_.parts()); }

 private:
  bool is_protected(NetId n) const { return n.index() < protected_.size() && protected_[n.index()]; }

  std::vector<std::size_t> eligible_gates(bool (*filter)(const Gate&)) {
    std::vector<std::size_t> out;
    const auto& gates = net_.parts().gates;
    for (std::size_t g = 0; g < gates.size(); ++g) {
      if (touched_.contains(g) || is_protected(gates[g].output)) continue;
      if (filter && !filter(gates[g])) continue;
      out.push_back(g);
    }
    return out;
  }

  template <class T>
  const T& pick(const std::vector<T>& pool) {
    return pool[static_cast<std::size_t>(uniform_below(rng_, pool.size()))];
  }

  std::optional<MutationEdit> apply(MutationKind kind) {
    switch (kind) {
      case MutationKind::GateTypeSubstitution: return substitute();
      case MutationKind::GateInsertion: return insert();
      case MutationKind::GateRemoval: return remove();
      case MutationKind::WireSwap: return swap();
    }
    return std::nullopt;
  }

  std::optional<MutationEdit> substitute() {
    const auto pool = eligible_gates(nullptr);
    if (pool.empty()) return std::nullopt;
    const std::size_t g = pick(pool);
    Gate& gate = net_.parts().gates[g];
    const std::string before = net_.describe(g);
    if (is_unary(gate.function)) {
      gate.function = gate.function == GateFunction::Not ? GateFunction::Buf : GateFunction::Not;
    } else {
      std::vector<GateFunction> options;
      for (GateFunction f : kBinaryFunctions) {
        if (f != gate.function) options.push_back(f);
      }
      gate.function = pick(options);
    }
    touched_.insert(g);
    return MutationEdit{MutationKind::GateTypeSubstitution, {net_.name(gate.output)}, before, net_.describe(g), 1};
  }

  std::optional<MutationEdit> insert() {
    const auto pool = eligible_gates(nullptr);
    if (pool.empty()) return std::nullopt;
    const std::size_t g = pick(pool);
    const NetId target = net_.parts().gates[g].output;
    const auto reached = net_.fanout(target);
    std::vector<NetId> second;
    for (std::size_t n = 0; n < reached.size(); ++n) {
      if (!reached[n] && !is_protected(NetId(n))) second.emplace_back(n);
    }
    if (second.empty()) return std::nullopt;
    const NetId other = pick(second);
    const GateFunction f = pick(std::vector<GateFunction>(std::begin(kBinaryFunctions), std::end(kBinaryFunctions)));

    const NetId inner = net_.add_net(net_.name(target) + "_pre_tamper");
    net_.retarget_output(g, inner);
    const std::size_t added = net_.add_gate(Gate{target, f, {inner, other}});
    touched_.insert(g);
    touched_.insert(added);
    return MutationEdit{MutationKind::GateInsertion,
                        {net_.name(target)},
                        "(driven directly)",
                        std::string(bench_token(f)) + "(" + net_.name(inner) + ", " + net_.name(other) + ")",
                        1};
  }

  std::optional<MutationEdit> remove() {
    const auto pool = eligible_gates([](const Gate& gate) { return gate.function != GateFunction::Buf; });
    if (pool.empty()) return std::nullopt;
    const std::size_t g = pick(pool);
    const std::string before = net_.describe(g);
    Gate& gate = net_.parts().gates[g];
    gate.function = GateFunction::Buf;
    net_.set_inputs(g, {gate.inputs.front()});
    touched_.insert(g);
    return MutationEdit{MutationKind::GateRemoval, {net_.name(gate.output)}, before, net_.describe(g), 1};
  }

  std::optional<MutationEdit> swap() {
    const auto pool = eligible_gates(nullptr);
    if (pool.size() < 2) return std::nullopt;
    const std::size_t g1 = pick(pool);
    std::size_t g2 = pick(pool);
    if (g1 == g2) return std::nullopt;
    auto& gates = net_.parts().gates;
    const std::size_t p1 = static_cast<std::size_t>(uniform_below(rng_, gates[g1].inputs.size()));
    const std::size_t p2 = static_cast<std::size_t>(uniform_below(rng_, gates[g2].inputs.size()));
    const NetId a = gates[g1].inputs[p1];
    const NetId b = gates[g2].inputs[p2];
    if (a == b) return std::nullopt;
    // Each rewired input must not depend on the gate it now feeds.
    if (net_.fanout(gates[g1].output)[b.index()]) return std::nullopt;
    const std::string before = net_.describe(g1) + "; " + net_.describe(g2);
    auto in1 = gates[g1].inputs;
    in1[p1] = b;
    net_.set_inputs(g1, std::move(in1));
    if (net_.fanout(gates[g2].output)[a.index()]) {
      auto undo = gates[g1].inputs;
      undo[p1] = a;
      net_.set_inputs(g1, std::move(undo));
      return std::nullopt;
    }
    auto in2 = gates[g2].inputs;
    in2[p2] = a;
    net_.set_inputs(g2, std::move(in2));
    touched_.insert(g1);
    touched_.insert(g2);
    return MutationEdit{MutationKind::WireSwap,
                        {net_.name(gates[g1].output), net_.name(gates[g2].output)},
                        before,
                        net_.describe(g1) + "; " + net_.describe(g2),
                        2};
  }

  MutableNetlist net_;
  const MutationSpec& spec_;
  Rng rng_;
  std::vector<bool> protected_;
  std::set<std::size_t> touched_;
};

}  // namespace

Mutation mutate(const Netlist& netlist, const MutationSpec& spec) {
  if (spec.magnitude == 0) throw std::invalid_argument("mutation magnitude must be >= 1");
  if (spec.kinds.empty()) throw std::invalid_argument("at least one mutation kind is required");
  std::size_t eligible = 0;
  std::vector<bool> prot(netlist.net_count(), false);
  for (NetId n : spec.protected_nets) {
    netlist.check(n);
    prot[n.index()] = true;
  }
  for (const Gate& g : netlist.gates()) eligible += !prot[g.output.index()];
  if (eligible < spec.magnitude) {
    throw MutationError("only " + std::to_string(eligible) + " unprotected gates for magnitude " +
                        std::to_string(spec.magnitude));
  }
  Mutator m(netlist, spec);
  MutationRecord record = m.run();
  NetlistParts parts = m.take();
  return Mutation{Netlist(std::move(parts)), std::move(record)};
}

std::vector<NetId> digest_logic_nets(const Netlist& netlist) {
  std::vector<NetId> out;
  for (std::size_t n = 0; n < netlist.net_count(); ++n) {
    if (netlist.net_name(NetId(n)).starts_with(kDigestPrefix)) out.emplace_back(n);
  }
  return out;
}

std::string_view to_string(Equivalence e) {
  switch (e) {
    case Equivalence::Changed: return "CHANGED";
    case Equivalence::NotObserved: return "NOT_OBSERVED";
    case Equivalence::ProvenEqual: return "PROVEN_EQUAL";
  }
  return "?";
}

Equivalence is_functionally_changed(const Netlist& original, const Netlist& mutated, std::size_t budget,
                                    std::uint64_t seed, std::size_t exhaustive_limit) {
  const std::size_t width = original.input_width();
  if (mutated.input_width() != width) throw std::invalid_argument("effective input widths differ");
  // Position of each original input in the mutated netlist's input order.
  std::vector<std::size_t> where(width);
  {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < width; ++j) pos.emplace(mutated.net_name(mutated.effective_inputs()[j]), j);
    for (std::size_t j = 0; j < width; ++j) {
      auto it = pos.find(original.net_name(original.effective_inputs()[j]));
      if (it == pos.end()) throw std::invalid_argument("effective inputs differ");
      where[j] = it->second;
    }
  }
  std::vector<std::pair<NetId, NetId>> outputs;
  for (NetId o : original.effective_outputs()) {
    auto m = mutated.find_net(original.net_name(o));
    if (!m) throw std::invalid_argument("output '" + original.net_name(o) + "' missing from mutated netlist");
    outputs.emplace_back(o, *m);
  }

  const bool exhaustive = width <= exhaustive_limit;
  std::vector<Vector> vectors;
  if (exhaustive) {
    const std::size_t rows = std::size_t{1} << width;
    vectors.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      Vector v(width);
      for (std::size_t j = 0; j < width; ++j) v.set(j, (r >> j) & 1U);
      vectors.push_back(std::move(v));
    }
  } else {
    vectors = generate_vectors(width, std::max<std::size_t>(budget, 1), seed).vectors;
  }
  std::vector<Vector> remapped;
  remapped.reserve(vectors.size());
  for (const Vector& v : vectors) {
    Vector m(width);
    for (std::size_t j = 0; j < width; ++j) m.set(where[j], v.get(j));
    remapped.push_back(std::move(m));
  }

  const TraceMatrix a = simulate(original, vectors);
  const TraceMatrix b = simulate(mutated, remapped);
  for (const auto& [oa, ob] : outputs) {
    const auto ca = a.column(oa);
    const auto cb = b.column(ob);
    if (!std::equal(ca.begin(), ca.end(), cb.begin())) return Equivalence::Changed;
  }
  return exhaustive ? Equivalence::ProvenEqual : Equivalence::NotObserved;
}

nlohmann::json to_json(const MutationEdit& edit) {
  return {{"kind", to_string(edit.kind)},
          {"targets", edit.targets},
          {"before", edit.before},
          {"after", edit.after},
          {"gates_changed", edit.gates_changed}};
}

void write_mutation_record(std::ostream& out, const MutationRecord& record) {
  for (const auto& e : record.edits) out << to_json(e).dump() << '\n';
}

}  // namespace netmark
