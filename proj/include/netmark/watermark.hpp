#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "netmark/netlist.hpp"
#include "netmark/select.hpp"
#include "netmark/sim.hpp"

namespace netmark {

/// Every net inserted by digest logic carries this prefix.
inline constexpr std::string_view kDigestPrefix = "SIGNED_DIGEST_";

struct WatermarkConfig {
  std::size_t digest_bits = 4;
  /// Sensitive nets per digest bit; the cluster count is digest_bits * group_size.
  std::size_t group_size = 8;
  std::size_t challenge_count = 100;
  std::size_t vector_count = 10000;
  std::uint64_t vector_seed = 1;
  std::uint64_t select_seed = 2;
  double threshold = 0.1;
  std::size_t max_iters = 100;
  std::size_t threads = 1;

  std::size_t cluster_count() const { return digest_bits * group_size; }
  /// Throws std::invalid_argument on a zero knob or a threshold outside (0, 1].
  void validate() const;
  nlohmann::json to_json() const;
};

struct DigestPlan {
  /// Sensitive nets feeding each digest bit, in XOR-chain order.
  std::vector<std::vector<NetId>> groups;
  /// Net observed as each digest bit in the watermarked netlist.
  std::vector<NetId> outputs;
  std::vector<std::string> output_names;
  /// Nets created by the insertion (XOR chain outputs).
  std::vector<NetId> inserted_nets;
  std::size_t inserted_gates = 0;
};

struct Watermarked {
  Netlist netlist;
  DigestPlan plan;
};

/// Appends one left-deep chain of two-input XORs per digest bit. Sensitive
/// nets are dealt round-robin into `digest_bits` groups; a chain over g nets
/// costs g - 1 gates and its last net `SIGNED_DIGEST_<i>` becomes a new
/// primary output. A single-net group is routed to a primary output as is.
/// Existing nets, gates and outputs keep their handles and order.
Watermarked insert_digest(const Netlist& netlist, std::span<const NetId> sensitive, std::size_t digest_bits);
Watermarked insert_digest(const Netlist& netlist, const SensitiveSet& sensitive, std::size_t digest_bits);

/// The `count` distinct vectors toggling the most sensitive nets relative to
/// the previous row (the default row for vector 0), best first, ties by index.
std::vector<Vector> mine_challenges(const TraceMatrix& trace, const RandomVectorSet& vectors,
                                    const BitVector& default_row, std::span<const NetId> sensitive,
                                    std::size_t count);
/// Toggle score of every vector, as used by mine_challenges.
std::vector<std::size_t> challenge_scores(const TraceMatrix& trace, const BitVector& default_row,
                                          std::span<const NetId> sensitive);

struct CrpEntry {
  Vector challenge;
  BitVector digest;
};

struct CrpDatabase {
  std::string circuit_id;
  std::size_t digest_bits = 0;
  /// Effective input names; challenge bit j drives inputs[j].
  std::vector<std::string> inputs;
  /// Output net name per digest bit.
  std::vector<std::string> digest_outputs;
  std::vector<CrpEntry> entries;
  nlohmann::json meta = nlohmann::json::object();
};

/// SHA-256 (hex) of the netlist's `.bench` text without the name header.
std::string circuit_id(const Netlist& netlist);

CrpDatabase build_crp_db(const Netlist& watermarked, const DigestPlan& plan, std::span<const Vector> challenges,
                         nlohmann::json meta = nlohmann::json::object());

/// Challenge as hex: input 0 is the most significant bit of a
/// width-bit number, zero-padded on the left to ceil(width / 4) digits.
std::string challenge_to_hex(const Vector& challenge);
Vector challenge_from_hex(std::string_view hex, std::size_t width);
/// Digest as '0'/'1' characters, digest bit 0 first.
std::string digest_to_bits(const BitVector& digest);
BitVector digest_from_bits(std::string_view bits);

nlohmann::json to_json(const CrpDatabase& db);
CrpDatabase crp_database_from_json(const nlohmann::json& doc);
void write_crp_database(const CrpDatabase& db, const std::filesystem::path& path);
CrpDatabase read_crp_database(const std::filesystem::path& path);

enum class Verdict { Authentic, Tampered };
std::string_view to_string(Verdict v);

struct EntryOutcome {
  BitVector observed;
  BitVector golden;
  std::size_t mismatches = 0;
};

struct DetectionReport {
  std::vector<EntryOutcome> entries;
  std::size_t entries_checked = 0;
  std::size_t entries_mismatched = 0;
  std::size_t max_bit_mismatches = 0;
  double mean_bit_mismatch_fraction = 0;
  Verdict verdict = Verdict::Authentic;
  bool circuit_id_matches = false;
  /// Interface problems (missing digest outputs, input mismatch). Any entry
  /// forces a Tampered verdict without simulation.
  std::vector<std::string> structural_issues;
  /// Effective inputs do not match the database (wrong circuit rather than tampering).
  bool input_mismatch = false;
};

struct AuthenticateOptions {
  /// Use only the first `max_entries` challenges (0 = all).
  std::size_t max_entries = 0;
  std::size_t threads = 1;
};

DetectionReport authenticate(const Netlist& under_test, const CrpDatabase& db, AuthenticateOptions options = {});

nlohmann::json to_json(const DetectionReport& report);

enum class ModificationSize { None, Small, Large };
std::string_view to_string(ModificationSize s);

struct ModificationThresholds {
  /// Largest per-entry digest-bit mismatch still classed as small.
  std::size_t small_max_bits = 1;
};

ModificationSize estimate_modification(const DetectionReport& report, ModificationThresholds thresholds = {});

/// Outputs of the whole insertion flow.
struct SignedDesign {
  Netlist original;
  Watermarked watermarked;
  SensitiveSet sensitive;
  ClusterModel clusters;
  CrpDatabase db;
};

/// Random vectors, trace, activity, clustering, selection, digest insertion,
/// challenge mining and golden responses, all seeded from `config`.
SignedDesign sign(const Netlist& netlist, const WatermarkConfig& config);

}  // namespace netmark
