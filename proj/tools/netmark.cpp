#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <json.hpp>

#include "netmark/evalbench.hpp"
#include "netmark/sim.hpp"
#include "netmark/tamper.hpp"
#include "netmark/watermark.hpp"

using namespace netmark;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTampered = 1;
constexpr int kExitUsage = 2;

std::filesystem::path default_output(const std::filesystem::path& in, const std::string& suffix) {
  return in.stem().string() + suffix;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void refuse_overwrite(const std::filesystem::path& in, const std::filesystem::path& out) {
  std::error_code ec;
  if (std::filesystem::exists(out) && std::filesystem::equivalent(in, out, ec)) {
    throw std::invalid_argument("refusing to overwrite input '" + in.string() + "'");
  }
}

Netlist load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw NetlistError("no such file '" + path.string() + "'");
  try {
    return read_bench_file(path);
  } catch (const ParseError& e) {
    throw NetlistError(path.string() + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                       e.what());
  }
}

struct SignArgs {
  std::filesystem::path in, out, db, sensitive;
  WatermarkConfig config;
  bool json = false;
};

int cmd_sign(const SignArgs& a) {
  const Netlist netlist = load(a.in);
  const SignedDesign design = sign(netlist, a.config);
  const auto out = a.out.empty() ? default_output(a.in, ".signed.bench") : a.out;
  const auto db = a.db.empty() ? default_output(a.in, ".crp.json") : a.db;
  refuse_overwrite(a.in, out);
  refuse_overwrite(a.in, db);
  write_bench_file(design.watermarked.netlist, out);
  write_crp_database(design.db, db);
  if (!a.sensitive.empty()) write_text(a.sensitive, to_json(design.sensitive, netlist).dump(2) + "\n");

  const std::size_t before = netlist.gate_count();
  const std::size_t after = design.watermarked.netlist.gate_count();
  if (a.json) {
    nlohmann::json report = {{"circuit", netlist.name()},
                             {"gates_before", before},
                             {"gates_after", after},
                             {"delta", after - before},
                             {"sensitive_nets", design.sensitive.size()},
                             {"kmeans_iterations", design.clusters.iterations_run},
                             {"circuit_id", design.db.circuit_id},
                             {"config", a.config.to_json()},
                             {"netlist", out.string()},
                             {"database", db.string()}};
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << "gates: " << before << " -> " << after << " (+" << after - before << ")\n"
              << "sensitive nets: " << design.sensitive.size() << " of k = " << a.config.cluster_count() << "\n"
              << "seeds: vector " << a.config.vector_seed << ", select " << a.config.select_seed << "\n"
              << "challenges: " << design.db.entries.size() << ", digest bits: " << design.db.digest_bits << "\n"
              << "circuit_id: " << design.db.circuit_id << "\n"
              << "wrote " << out.string() << ", " << db.string() << "\n";
  }
  return kExitOk;
}

struct VerifyArgs {
  std::filesystem::path in, db;
  std::size_t max_challenges = 0;
  std::size_t small_max_bits = 1;
  std::size_t threads = 1;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a) {
  const Netlist netlist = load(a.in);
  const CrpDatabase db = read_crp_database(a.db);
  const DetectionReport report = authenticate(netlist, db, {a.max_challenges, a.threads});
  if (!report.circuit_id_matches) {
    std::cerr << "warning: circuit_id differs from the database; checking challenges anyway\n";
  }
  const auto estimate = estimate_modification(report, {a.small_max_bits});
  if (a.json) {
    std::cout << to_json(report).dump(2) << "\n";
  } else {
    std::cout << "verdict: " << to_string(report.verdict) << "\n"
              << "modification: " << to_string(estimate) << "\n"
              << "challenges: " << report.entries_mismatched << " of " << report.entries_checked << " mismatched\n"
              << "max bit mismatch: " << report.max_bit_mismatches << " of " << db.digest_bits << "\n"
              << "mean bit mismatch fraction: " << report.mean_bit_mismatch_fraction << "\n";
    for (const auto& issue : report.structural_issues) std::cout << "structural: " << issue << "\n";
  }
  if (report.input_mismatch) return kExitUsage;
  return report.verdict == Verdict::Authentic ? kExitOk : kExitTampered;
}

struct MutateArgs {
  std::filesystem::path in, out, record;
  std::string kinds = "mixed";
  std::size_t magnitude = 1;
  std::uint64_t seed = 0;
  bool unprotected = false;
  bool json = false;
};

int cmd_mutate(const MutateArgs& a) {
  const Netlist netlist = load(a.in);
  MutationSpec spec;
  spec.kinds = parse_mutation_kinds(a.kinds);
  spec.magnitude = a.magnitude;
  spec.seed = a.seed;
  if (!a.unprotected) spec.protected_nets = digest_logic_nets(netlist);
  const Mutation m = mutate(netlist, spec);
  const auto out = a.out.empty() ? default_output(a.in, ".mutated.bench") : a.out;
  refuse_overwrite(a.in, out);
  write_bench_file(m.netlist, out);
  if (!a.record.empty()) {
    std::ofstream rec(a.record, std::ios::binary);
    if (!rec) throw std::runtime_error("cannot write '" + a.record.string() + "'");
    write_mutation_record(rec, m.record);
  }
  if (a.json) {
    nlohmann::json edits = nlohmann::json::array();
    for (const auto& e : m.record.edits) edits.push_back(to_json(e));
    std::cout << nlohmann::json{{"seed", a.seed},
                                {"kinds", kinds_label(spec.kinds)},
                                {"magnitude", a.magnitude},
                                {"gates_changed", m.record.total_gates_changed},
                                {"edits", edits},
                                {"netlist", out.string()}}
                     .dump(2)
              << "\n";
  } else {
    std::cout << "seed: " << a.seed << ", kinds: " << kinds_label(spec.kinds) << "\n";
    for (const auto& e : m.record.edits) {
      std::cout << to_string(e.kind) << ": " << e.before << " -> " << e.after << "\n";
    }
    std::cout << "gates changed: " << m.record.total_gates_changed << "\nwrote " << out.string() << "\n";
  }
  return kExitOk;
}

struct BenchArgs {
  std::filesystem::path plan, out;
  bool profile = false;
  bool overhead = false;
  bool timing = false;
  std::size_t threads = 1;
};

int cmd_bench(const BenchArgs& a) {
  std::ifstream in(a.plan, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open plan '" + a.plan.string() + "'");
  ExperimentPlan plan = plan_from_json(nlohmann::json::parse(in), a.plan.parent_path());
  plan.threads = a.threads;
  plan.record_timing = plan.record_timing || a.timing;
  if (!a.out.empty()) plan.output = a.out;
  if (plan.output.empty()) plan.output = default_output(a.plan, ".csv");

  if (a.overhead) {
    std::vector<Netlist> corpus;
    for (const auto& p : plan.corpus) corpus.push_back(load(p));
    std::string csv;
    for (std::size_t d : plan.digest_widths) {
      WatermarkConfig config;
      config.digest_bits = d;
      config.group_size = plan.group_size;
      config.vector_count = plan.vector_count;
      config.vector_seed = plan.vector_seed;
      config.select_seed = plan.select_seed;
      config.threshold = plan.threshold;
      config.challenge_count = *std::max_element(plan.challenge_counts.begin(), plan.challenge_counts.end());
      config.threads = plan.threads;
      const std::string part = overhead_csv(overhead_table(corpus, config));
      csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
    }
    write_text(plan.output, csv);
    std::cout << csv;
    return kExitOk;
  }

  const ResultTable table = a.profile ? run_mismatch_profile(plan) : run_detection_sweep(plan);
  write_text(plan.output, to_csv(table));
  auto meta_path = plan.output;
  meta_path += ".meta.json";
  write_text(meta_path, report_metadata(plan, table).dump(2) + "\n");
  std::cout << "seed: " << plan.seed << ", trials: " << plan.trials << "\n"
            << "rows: " << table.rows.size() << "\nwrote " << plan.output.string() << ", " << meta_path.string()
            << "\n";
  for (const auto& f : table.failures) std::cerr << "failed: " << f.benchmark << ": " << f.message << "\n";
  return table.failures.empty() ? kExitOk : kExitUsage;
}

struct SimulateArgs {
  std::filesystem::path in, dump;
  std::size_t vectors = 16;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  const Netlist netlist = load(a.in);
  const RandomVectorSet vectors = generate_vectors(netlist, a.vectors, a.seed);
  const TraceMatrix trace = simulate(netlist, vectors, SimOptions{a.threads});
  if (!a.dump.empty()) {
    std::ofstream out(a.dump, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + a.dump.string() + "'");
    write_trace(out, trace);
    std::cout << "seed: " << a.seed << ", vectors: " << trace.rows() << ", nets: " << trace.nets() << "\nwrote "
              << a.dump.string() << "\n";
    return kExitOk;
  }
  for (std::size_t n = 0; n < netlist.net_count(); ++n) std::cout << (n ? "," : "") << netlist.net_name(NetId(n));
  std::cout << "\n";
  for (std::size_t r = 0; r < trace.rows(); ++r) {
    for (std::size_t n = 0; n < trace.nets(); ++n) std::cout << (n ? "," : "") << trace.at(r, NetId(n));
    std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netmark: netlist watermarking, authentication and tamper evaluation"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  SignArgs sa;
  auto* sign_cmd = app.add_subcommand("sign", "insert the digest and write the CRP database");
  sign_cmd->add_option("--in", sa.in, "input .bench")->required();
  sign_cmd->add_option("--out", sa.out, "watermarked .bench (default <stem>.signed.bench)");
  sign_cmd->add_option("--db", sa.db, "CRP database JSON (default <stem>.crp.json)");
  sign_cmd->add_option("--sensitive", sa.sensitive, "also write the sensitive-net set as JSON");
  sign_cmd->add_option("--digest-bits,-d", sa.config.digest_bits, "digest width d")->capture_default_str();
  sign_cmd->add_option("--group-size,-g", sa.config.group_size, "sensitive nets per digest bit (k = d*g)")
      ->capture_default_str();
  sign_cmd->add_option("--challenges,-C", sa.config.challenge_count, "challenge vectors stored")->capture_default_str();
  sign_cmd->add_option("--vectors,-N", sa.config.vector_count, "random vectors for the trace")->capture_default_str();
  sign_cmd->add_option("--vector-seed", sa.config.vector_seed, "seed of the random vectors")->capture_default_str();
  sign_cmd->add_option("--select-seed", sa.config.select_seed, "seed of k-means and net selection")
      ->capture_default_str();
  sign_cmd->add_option("--threshold", sa.config.threshold, "top fraction of each cluster eligible")
      ->capture_default_str();
  sign_cmd->add_option("--max-iters", sa.config.max_iters, "k-means iteration cap")->capture_default_str();
  sign_cmd->add_option("--threads", sa.config.threads, "simulation threads (0 = auto)")->capture_default_str();
  sign_cmd->add_flag("--json", sa.json, "JSON report");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "authenticate a netlist (exit 0 authentic, 1 tampered)");
  verify_cmd->add_option("--in", va.in, "netlist under test")->required();
  verify_cmd->add_option("--db", va.db, "CRP database JSON")->required();
  verify_cmd->add_option("--max-challenges", va.max_challenges, "use only the first n challenges (0 = all)")
      ->capture_default_str();
  verify_cmd->add_option("--small-max-bits", va.small_max_bits, "largest per-challenge mismatch called SMALL")
      ->capture_default_str();
  verify_cmd->add_option("--threads", va.threads, "simulation threads (0 = auto)")->capture_default_str();
  verify_cmd->add_flag("--json", va.json, "JSON report");

  MutateArgs ma;
  auto* mutate_cmd = app.add_subcommand("mutate", "inject structural modifications");
  mutate_cmd->add_option("--in", ma.in, "input .bench")->required();
  mutate_cmd->add_option("--out", ma.out, "mutated .bench (default <stem>.mutated.bench)");
  mutate_cmd->add_option("--record", ma.record, "edit log, one JSON object per line");
  mutate_cmd->add_option("--magnitude", ma.magnitude, "number of edits")->capture_default_str();
  mutate_cmd->add_option("--kinds", ma.kinds, "mixed or a list of substitution,insertion,removal,swap")
      ->capture_default_str();
  mutate_cmd->add_option("--seed", ma.seed, "mutation seed")->capture_default_str();
  mutate_cmd->add_flag("--unprotected", ma.unprotected, "allow edits to digest logic");
  mutate_cmd->add_flag("--json", ma.json, "JSON report");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "run an experiment plan and write CSV");
  bench_cmd->add_option("--plan", ba.plan, "plan JSON")->required();
  bench_cmd->add_option("--out", ba.out, "CSV path (default: plan output or <plan>.csv)");
  bench_cmd->add_flag("--profile", ba.profile, "mismatch profile at the largest challenge count only");
  bench_cmd->add_flag("--overhead", ba.overhead, "gate-count overhead table instead of a sweep");
  bench_cmd->add_flag("--timing", ba.timing, "fill the seconds column");
  bench_cmd->add_option("--threads", ba.threads, "trial threads (0 = auto)")->capture_default_str();

  SimulateArgs sia;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate random vectors and print or dump the trace");
  sim_cmd->add_option("--in", sia.in, "input .bench")->required();
  sim_cmd->add_option("--vectors", sia.vectors, "number of random vectors")->capture_default_str();
  sim_cmd->add_option("--seed", sia.seed, "vector seed")->capture_default_str();
  sim_cmd->add_option("--dump", sia.dump, "write the binary trace here instead of printing CSV");
  sim_cmd->add_option("--threads", sia.threads, "simulation threads (0 = auto)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sign_cmd) return cmd_sign(sa);
    if (*verify_cmd) return cmd_verify(va);
    if (*mutate_cmd) return cmd_mutate(ma);
    if (*bench_cmd) return cmd_bench(ba);
    if (*sim_cmd) return cmd_simulate(sia);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
