#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "netmark/netlist.hpp"
#include "netmark/tamper.hpp"
#include "netmark/watermark.hpp"

namespace netmark {

struct ExperimentPlan {
  std::vector<std::filesystem::path> corpus;
  std::size_t trials = 200;
  /// Absolute gate-edit counts. Magnitude 0 control rows are always added.
  std::vector<std::size_t> magnitudes{1, 5, 10};
  /// Magnitudes given as a percentage of the circuit's gate count (rounded up).
  std::vector<double> magnitude_percents;
  std::vector<std::size_t> challenge_counts{100};
  std::vector<std::size_t> digest_widths{4};
  std::size_t group_size = 8;
  std::vector<std::vector<MutationKind>> kind_sets{{std::begin(kAllMutationKinds), std::end(kAllMutationKinds)}};
  std::uint64_t seed = 1;
  std::size_t vector_count = 10000;
  std::uint64_t vector_seed = 1;
  std::uint64_t select_seed = 2;
  double threshold = 0.1;
  /// Random vectors for the equivalence check on circuits too wide to enumerate.
  std::size_t equivalence_budget = 0;
  std::size_t exhaustive_limit = 12;
  /// Mutations may touch the digest logic.
  bool unprotected = false;
  std::size_t threads = 1;
  /// Fill the seconds column; off keeps the CSV byte-identical across runs.
  bool record_timing = false;
  std::filesystem::path output;

  /// Throws std::invalid_argument on an empty grid or zero trials.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Reads a plan document; relative corpus and output paths resolve against `base_dir`.
ExperimentPlan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Outcome of one mutated copy, evaluated at every challenge count of the plan.
struct TrialSample {
  std::string benchmark;
  std::string kind;
  std::size_t magnitude = 0;
  std::size_t digest_bits = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Equivalence equivalence = Equivalence::NotObserved;
  bool excluded = false;
  /// One entry per challenge count, ascending.
  std::vector<std::uint8_t> detected;
  std::vector<double> mean_fraction;
  std::vector<std::size_t> max_bits;
};

struct ResultRow {
  std::string benchmark;
  std::string kind;
  std::size_t magnitude = 0;
  std::size_t challenges = 0;
  std::size_t digest_bits = 0;
  std::size_t trials = 0;
  std::size_t excluded = 0;
  std::size_t detected = 0;
  double rate = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  double mean_bit_mismatch = 0;
  std::size_t max_bit_mismatch = 0;
  double seconds = 0;
};

struct CircuitFailure {
  std::string benchmark;
  std::string message;
};

struct ResultTable {
  std::vector<ResultRow> rows;
  std::vector<TrialSample> samples;
  std::vector<CircuitFailure> failures;
};

inline constexpr const char* kResultCsvHeader =
    "benchmark,kind,magnitude,challenges,digest_bits,trials,excluded,detected,rate,ci_lo,ci_hi,"
    "mean_bit_mismatch,max_bit_mismatch,seconds";

/// Per circuit and digest width: sign once with the largest challenge count,
/// then per (kind set, magnitude, trial) mutate the watermarked netlist and
/// authenticate. Smaller challenge counts use prefixes of the same challenge
/// list, so every count sees the same mutations. Failures are recorded per
/// circuit and the sweep continues.
ResultTable run_detection_sweep(const ExperimentPlan& plan);

/// The sweep restricted to the largest challenge count: mean and max
/// mismatched digest bits as magnitude grows.
ResultTable run_mismatch_profile(const ExperimentPlan& plan);

std::string to_csv(const ResultTable& table);
/// Plan, failures and the scan convention, written next to the CSV.
nlohmann::json report_metadata(const ExperimentPlan& plan, const ResultTable& table);

struct OverheadRow {
  std::string benchmark;
  std::size_t gates_before = 0;
  std::size_t gates_after = 0;
  std::size_t delta = 0;
  std::size_t expected_delta = 0;
};

/// Watermarks each netlist with `config` and reports the gate counts.
std::vector<OverheadRow> overhead_table(const std::vector<Netlist>& corpus, const WatermarkConfig& config);
std::string overhead_csv(const std::vector<OverheadRow>& rows);

}  // namespace netmark
