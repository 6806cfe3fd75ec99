#pragma once

#include <cstdint>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "netmark/netlist.hpp"

namespace netmark {

enum class MutationKind { GateTypeSubstitution, GateInsertion, GateRemoval, WireSwap };

inline constexpr MutationKind kAllMutationKinds[] = {MutationKind::GateTypeSubstitution, MutationKind::GateInsertion,
                                                     MutationKind::GateRemoval, MutationKind::WireSwap};

std::string_view to_string(MutationKind kind);
/// Accepts substitution, insertion, removal, swap (and the enum-style names).
std::optional<MutationKind> parse_mutation_kind(std::string_view text);
/// Parses "mixed" or a comma-separated kind list.
std::vector<MutationKind> parse_mutation_kinds(std::string_view text);
std::string kinds_label(std::span<const MutationKind> kinds);

class MutationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MutationSpec {
  /// Each edit draws its kind uniformly from this list.
  std::vector<MutationKind> kinds{std::begin(kAllMutationKinds), std::end(kAllMutationKinds)};
  std::size_t magnitude = 1;
  std::uint64_t seed = 0;
  /// Nets (and the gates driving them) that no edit may touch or read.
  std::vector<NetId> protected_nets;
  std::size_t max_retries = 64;
};

struct MutationEdit {
  MutationKind kind;
  /// Output nets of the gates involved.
  std::vector<std::string> targets;
  std::string before;
  std::string after;
  std::size_t gates_changed = 1;
};

struct MutationRecord {
  std::vector<MutationEdit> edits;
  std::size_t total_gates_changed = 0;
};

struct Mutation {
  Netlist netlist;
  MutationRecord record;
};

/// Applies `spec.magnitude` edits, each to gates no earlier edit touched:
///  - substitution: a different function of the same arity class;
///  - insertion: a random two-input gate spliced onto a gate-driven net, its
///    second input drawn from nets outside that net's fan-out;
///  - removal: the gate becomes a BUFF of its first input;
///  - wire swap: one input of each of two gates exchanged, cycle-checked.
/// The result is validated like any netlist. Deterministic per seed.
Mutation mutate(const Netlist& netlist, const MutationSpec& spec);

/// Nets whose name carries the digest prefix.
std::vector<NetId> digest_logic_nets(const Netlist& netlist);

enum class Equivalence { Changed, NotObserved, ProvenEqual };
std::string_view to_string(Equivalence e);

/// Compares the original's effective outputs. Exhaustive (and therefore able
/// to prove equality) up to `exhaustive_limit` effective inputs; otherwise
/// `budget` random vectors drawn from `seed`.
Equivalence is_functionally_changed(const Netlist& original, const Netlist& mutated, std::size_t budget,
                                    std::uint64_t seed = 0, std::size_t exhaustive_limit = 12);

nlohmann::json to_json(const MutationEdit& edit);
/// One JSON object per line.
void write_mutation_record(std::ostream& out, const MutationRecord& record);

}  // namespace netmark
