#include "netmark/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "netmark/parallel.hpp"
#include "netmark/rng.hpp"
#include "netmark/stats.hpp"

namespace netmark {

void ExperimentPlan::validate() const {
  if (corpus.empty()) throw std::invalid_argument("plan corpus is empty");
  if (trials == 0) throw std::invalid_argument("trials must be >= 1");
  if (magnitudes.empty() && magnitude_percents.empty()) throw std::invalid_argument("magnitude grid is empty");
  if (challenge_counts.empty()) throw std::invalid_argument("challenge grid is empty");
  if (digest_widths.empty()) throw std::invalid_argument("digest width grid is empty");
  if (kind_sets.empty()) throw std::invalid_argument("kind grid is empty");
  for (std::size_t c : challenge_counts) {
    if (c == 0) throw std::invalid_argument("challenge counts must be >= 1");
  }
  for (std::size_t d : digest_widths) {
    if (d == 0) throw std::invalid_argument("digest widths must be >= 1");
  }
  for (double p : magnitude_percents) {
    if (!(p > 0 && p <= 100)) throw std::invalid_argument("magnitude percents must be in (0, 100]");
  }
  for (const auto& k : kind_sets) {
    if (k.empty()) throw std::invalid_argument("empty kind set");
  }
  if (group_size == 0) throw std::invalid_argument("group size must be >= 1");
}

nlohmann::json ExperimentPlan::to_json() const {
  std::vector<std::string> paths;
  for (const auto& p : corpus) paths.push_back(p.filename().string());
  std::vector<std::string> kinds;
  for (const auto& k : kind_sets) kinds.push_back(kinds_label(k));
  return {{"corpus", paths},
          {"trials", trials},
          {"magnitudes", magnitudes},
          {"magnitude_percents", magnitude_percents},
          {"challenges", challenge_counts},
          {"digest_bits", digest_widths},
          {"group_size", group_size},
          {"kinds", kinds},
          {"seed", seed},
          {"vectors", vector_count},
          {"vector_seed", vector_seed},
          {"select_seed", select_seed},
          {"threshold", threshold},
          {"equivalence_budget", equivalence_budget},
          {"exhaustive_limit", exhaustive_limit},
          {"unprotected", unprotected}};
}

ExperimentPlan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  ExperimentPlan plan;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  for (const auto& p : doc.at("corpus")) plan.corpus.push_back(resolve(p.get<std::string>()));
  plan.trials = doc.value("trials", plan.trials);
  plan.magnitudes = doc.value("magnitudes", plan.magnitudes);
  plan.magnitude_percents = doc.value("magnitude_percents", plan.magnitude_percents);
  plan.challenge_counts = doc.value("challenges", plan.challenge_counts);
  plan.digest_widths = doc.value("digest_bits", plan.digest_widths);
  plan.group_size = doc.value("group_size", plan.group_size);
  if (doc.contains("kinds")) {
    plan.kind_sets.clear();
    for (const auto& k : doc.at("kinds")) plan.kind_sets.push_back(parse_mutation_kinds(k.get<std::string>()));
  }
  plan.seed = doc.value("seed", plan.seed);
  plan.vector_count = doc.value("vectors", plan.vector_count);
  plan.vector_seed = doc.value("vector_seed", plan.vector_seed);
  plan.select_seed = doc.value("select_seed", plan.select_seed);
  plan.threshold = doc.value("threshold", plan.threshold);
  plan.equivalence_budget = doc.value("equivalence_budget", plan.equivalence_budget);
  plan.exhaustive_limit = doc.value("exhaustive_limit", plan.exhaustive_limit);
  plan.unprotected = doc.value("unprotected", plan.unprotected);
  plan.threads = doc.value("threads", plan.threads);
  plan.record_timing = doc.value("timing", plan.record_timing);
  if (doc.contains("output")) plan.output = resolve(doc.at("output").get<std::string>());
  plan.validate();
  return plan;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::size_t> resolve_magnitudes(const ExperimentPlan& plan, std::size_t gate_count) {
  std::vector<std::size_t> out{0};
  out.insert(out.end(), plan.magnitudes.begin(), plan.magnitudes.end());
  for (double p : plan.magnitude_percents) {
    const double raw = p / 100.0 * static_cast<double>(gate_count);
    out.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9))));
  }
  return sorted_unique(std::move(out));
}

TrialSample run_trial(const Netlist& original, const SignedDesign& design, const std::vector<NetId>& protected_nets,
                      const std::vector<MutationKind>& kinds, std::size_t magnitude, std::uint64_t seed,
                      const std::vector<std::size_t>& counts, const ExperimentPlan& plan) {
  TrialSample s;
  s.seed = seed;
  const Netlist* under_test = &design.watermarked.netlist;
  std::optional<Mutation> mutation;
  if (magnitude > 0) {
    MutationSpec spec;
    spec.kinds = kinds;
    spec.magnitude = magnitude;
    spec.seed = seed;
    spec.protected_nets = protected_nets;
    mutation = mutate(design.watermarked.netlist, spec);
    under_test = &mutation->netlist;
    if (original.input_width() <= plan.exhaustive_limit || plan.equivalence_budget > 0) {
      s.equivalence = is_functionally_changed(original, *under_test, plan.equivalence_budget,
                                              mix64(seed ^ 0x6571756976ULL), plan.exhaustive_limit);
      s.excluded = s.equivalence == Equivalence::ProvenEqual;
    }
  }
  const DetectionReport report = authenticate(*under_test, design.db, {counts.back(), 1});
  for (std::size_t c : counts) {
    std::size_t mismatched = 0;
    std::size_t max_bits = 0;
    double fraction = 0;
    const std::size_t used = std::min(c, report.entries.size());
    for (std::size_t i = 0; i < used; ++i) {
      const auto m = report.entries[i].mismatches;
      mismatched += m != 0;
      max_bits = std::max(max_bits, m);
      fraction += static_cast<double>(m) / static_cast<double>(design.db.digest_bits);
    }
    const bool structural = !report.structural_issues.empty();
    s.detected.push_back(structural || mismatched > 0);
    s.mean_fraction.push_back(structural ? 1.0 : (used ? fraction / static_cast<double>(used) : 0.0));
    s.max_bits.push_back(structural ? design.db.digest_bits : max_bits);
  }
  return s;
}

ResultTable run_sweep(const ExperimentPlan& plan, std::vector<std::size_t> counts) {
  plan.validate();
  ResultTable table;
  for (const auto& path : plan.corpus) {
    const std::string bench_name = path.stem().string();
    try {
      const Netlist original = read_bench_file(path);
      const auto magnitudes = resolve_magnitudes(plan, original.gate_count());
      for (std::size_t d : plan.digest_widths) {
        WatermarkConfig config;
        config.digest_bits = d;
        config.group_size = plan.group_size;
        config.challenge_count = counts.back();
        config.vector_count = plan.vector_count;
        config.vector_seed = plan.vector_seed;
        config.select_seed = plan.select_seed;
        config.threshold = plan.threshold;
        config.threads = plan.threads;
        const SignedDesign design = sign(original, config);
        std::vector<NetId> protected_nets;
        if (!plan.unprotected) protected_nets = digest_logic_nets(design.watermarked.netlist);

        std::vector<ResultRow> rows;
        std::vector<TrialSample> samples;
        for (const auto& kinds : plan.kind_sets) {
          const std::string label = kinds_label(kinds);
          for (std::size_t magnitude : magnitudes) {
            const auto start = std::chrono::steady_clock::now();
            std::vector<TrialSample> cell(plan.trials);
            parallel_for(plan.trials, plan.threads, [&](std::size_t t) {
              const std::uint64_t seed = derive_seed(plan.seed, {fnv1a(bench_name), fnv1a(label), magnitude, t});
              cell[t] = run_trial(original, design, protected_nets, kinds, magnitude, seed, counts, plan);
              cell[t].benchmark = bench_name;
              cell[t].kind = label;
              cell[t].magnitude = magnitude;
              cell[t].digest_bits = d;
              cell[t].trial = t;
            });
            const double seconds =
                plan.record_timing
                    ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
                    : 0.0;
            for (std::size_t ci = 0; ci < counts.size(); ++ci) {
              ResultRow row{bench_name, label, magnitude, counts[ci], d, plan.trials};
              double fraction_sum = 0;
              for (const auto& s : cell) {
                if (s.excluded) {
                  ++row.excluded;
                  continue;
                }
                row.detected += s.detected[ci];
                fraction_sum += s.mean_fraction[ci];
                row.max_bit_mismatch = std::max(row.max_bit_mismatch, s.max_bits[ci]);
              }
              const std::size_t counted = row.trials - row.excluded;
              row.rate = counted ? static_cast<double>(row.detected) / static_cast<double>(counted) : 0.0;
              const Interval ci95 = wilson_interval(row.detected, counted);
              row.ci_lo = ci95.lo;
              row.ci_hi = ci95.hi;
              row.mean_bit_mismatch = counted ? fraction_sum / static_cast<double>(counted) : 0.0;
              row.seconds = seconds;
              rows.push_back(row);
            }
            samples.insert(samples.end(), std::make_move_iterator(cell.begin()), std::make_move_iterator(cell.end()));
          }
        }
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
        table.samples.insert(table.samples.end(), std::make_move_iterator(samples.begin()),
                             std::make_move_iterator(samples.end()));
      }
    } catch (const std::exception& e) {
      table.failures.push_back({bench_name, e.what()});
    }
  }
  return table;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ResultTable run_detection_sweep(const ExperimentPlan& plan) {
  return run_sweep(plan, sorted_unique(plan.challenge_counts));
}

ResultTable run_mismatch_profile(const ExperimentPlan& plan) {
  if (plan.challenge_counts.empty()) throw std::invalid_argument("challenge grid is empty");
  return run_sweep(plan, {*std::max_element(plan.challenge_counts.begin(), plan.challenge_counts.end())});
}

std::string to_csv(const ResultTable& table) {
  std::string out = std::string(kResultCsvHeader) + "\n";
  for (const auto& r : table.rows) {
    out += r.benchmark + "," + r.kind + "," + std::to_string(r.magnitude) + "," + std::to_string(r.challenges) + "," +
           std::to_string(r.digest_bits) + "," + std::to_string(r.trials) + "," + std::to_string(r.excluded) + "," +
           std::to_string(r.detected) + "," + fixed(r.rate, 6) + "," + fixed(r.ci_lo, 6) + "," + fixed(r.ci_hi, 6) +
           "," + fixed(r.mean_bit_mismatch, 6) + "," + std::to_string(r.max_bit_mismatch) + "," +
           fixed(r.seconds, 3) + "\n";
  }
  return out;
}

nlohmann::json report_metadata(const ExperimentPlan& plan, const ResultTable& table) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : table.failures) failures.push_back({{"benchmark", f.benchmark}, {"error", f.message}});
  return {{"plan", plan.to_json()},
          {"rows", table.rows.size()},
          {"failures", failures},
          {"scan", "full scan: DFF Q nets are pseudo primary inputs, DFF D nets pseudo primary outputs"},
          {"detection", "TAMPERED verdict: at least one mismatched digest bit on at least one challenge"},
          {"excluded", "mutations proven equivalent on the original outputs by exhaustive simulation"},
          {"challenge_pairing", "smaller challenge counts use prefixes of the same challenge list"}};
}

std::vector<OverheadRow> overhead_table(const std::vector<Netlist>& corpus, const WatermarkConfig& config) {
  std::vector<OverheadRow> rows;
  for (const Netlist& n : corpus) {
    const SignedDesign design = sign(n, config);
    OverheadRow row;
    row.benchmark = n.name();
    row.gates_before = n.gate_count();
    row.gates_after = design.watermarked.netlist.gate_count();
    row.delta = row.gates_after - row.gates_before;
    row.expected_delta = config.digest_bits * (config.group_size - 1);
    rows.push_back(row);
  }
  return rows;
}

std::string overhead_csv(const std::vector<OverheadRow>& rows) {
  std::string out = "benchmark,gates_before,gates_after,delta,expected_delta\n";
  for (const auto& r : rows) {
    out += r.benchmark + "," + std::to_string(r.gates_before) + "," + std::to_string(r.gates_after) + "," +
           std::to_string(r.delta) + "," + std::to_string(r.expected_delta) + "\n";
  }
  return out;
}

}  // namespace netmark
