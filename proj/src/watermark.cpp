#include "netmark/watermark.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "netmark/parallel.hpp"

namespace netmark {

void WatermarkConfig::validate() const {
  if (digest_bits == 0) throw std::invalid_argument("digest bits must be >= 1");
  if (group_size == 0) throw std::invalid_argument("group size must be >= 1");
  if (challenge_count == 0) throw std::invalid_argument("challenge count must be >= 1");
  if (vector_count == 0) throw std::invalid_argument("vector count must be >= 1");
  if (max_iters == 0) throw std::invalid_argument("k-means iterations must be >= 1");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
}

nlohmann::json WatermarkConfig::to_json() const {
  return {{"digest_bits", digest_bits},     {"group_size", group_size}, {"challenges", challenge_count},
          {"vectors", vector_count},        {"vector_seed", vector_seed}, {"select_seed", select_seed},
          {"threshold", threshold},         {"kmeans_max_iters", max_iters}};
}

Watermarked insert_digest(const Netlist& netlist, std::span<const NetId> sensitive, std::size_t digest_bits) {
  if (digest_bits == 0) throw std::invalid_argument("digest width must be >= 1");
  if (digest_bits > sensitive.size()) {
    throw std::invalid_argument("digest width " + std::to_string(digest_bits) + " exceeds " +
                                std::to_string(sensitive.size()) + " sensitive nets");
  }
  for (NetId n : sensitive) netlist.check(n);
  for (const auto& name : netlist.parts().net_names) {
    if (name.starts_with(kDigestPrefix)) {
      throw std::invalid_argument("net '" + name + "' collides with the digest prefix");
    }
  }

  NetlistParts parts = netlist.parts();
  DigestPlan plan;
  plan.groups.resize(digest_bits);
  for (std::size_t i = 0; i < sensitive.size(); ++i) plan.groups[i % digest_bits].push_back(sensitive[i]);

  std::set<NetId> outputs(parts.primary_outputs.begin(), parts.primary_outputs.end());
  for (std::size_t bit = 0; bit < digest_bits; ++bit) {
    const auto& group = plan.groups[bit];
    const std::string out_name = std::string(kDigestPrefix) + std::to_string(bit);
    NetId acc = group.front();
    for (std::size_t j = 1; j < group.size(); ++j) {
      const bool last = j + 1 == group.size();
      NetId out = parts.add_net(last ? out_name : out_name + "_" + std::to_string(j));
      parts.gates.push_back(Gate{out, GateFunction::Xor, {acc, group[j]}});
      plan.inserted_nets.push_back(out);
      ++plan.inserted_gates;
      acc = out;
    }
    plan.outputs.push_back(acc);
    plan.output_names.push_back(parts.net_names[acc.index()]);
    if (outputs.insert(acc).second) parts.primary_outputs.push_back(acc);
  }
  return Watermarked{Netlist(std::move(parts)), std::move(plan)};
}

Watermarked insert_digest(const Netlist& netlist, const SensitiveSet& sensitive, std::size_t digest_bits) {
  const auto nets = sensitive.nets();
  return insert_digest(netlist, nets, digest_bits);
}

std::vector<std::size_t> challenge_scores(const TraceMatrix& trace, const BitVector& default_row,
                                          std::span<const NetId> sensitive) {
  std::vector<std::size_t> score(trace.rows(), 0);
  for (NetId n : sensitive) {
    if (n.index() >= trace.nets()) throw std::out_of_range("sensitive net outside trace");
    bool prev = default_row.get(n.index());
    for (std::size_t r = 0; r < trace.rows(); ++r) {
      const bool cur = trace.at(r, n);
      score[r] += cur != prev;
      prev = cur;
    }
  }
  return score;
}

std::vector<Vector> mine_challenges(const TraceMatrix& trace, const RandomVectorSet& vectors,
                                    const BitVector& default_row, std::span<const NetId> sensitive,
                                    std::size_t count) {
  if (trace.rows() != vectors.size()) throw std::invalid_argument("trace was not built from these vectors");
  if (count == 0) throw std::invalid_argument("challenge count must be >= 1");
  const auto score = challenge_scores(trace, default_row, sensitive);
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });

  std::vector<Vector> out;
  std::set<Vector> seen;
  for (std::size_t idx : order) {
    if (out.size() == count) break;
    if (seen.insert(vectors.vectors[idx]).second) out.push_back(vectors.vectors[idx]);
  }
  if (out.size() < count) {
    throw std::invalid_argument("requested " + std::to_string(count) + " challenges but only " +
                                std::to_string(out.size()) + " distinct vectors exist");
  }
  return out;
}

std::string circuit_id(const Netlist& netlist) {
  const std::string text = serialize_bench(netlist, false);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 15];
  }
  return hex;
}

namespace {

std::vector<BitVector> digest_rows(const Netlist& netlist, std::span<const NetId> outputs,
                                   std::span<const Vector> vectors, std::size_t threads) {
  const TraceMatrix trace = simulate(netlist, vectors, SimOptions{threads});
  std::vector<BitVector> rows(vectors.size(), BitVector(outputs.size()));
  for (std::size_t r = 0; r < vectors.size(); ++r) {
    for (std::size_t b = 0; b < outputs.size(); ++b) rows[r].set(b, trace.at(r, outputs[b]));
  }
  return rows;
}

}  // namespace

CrpDatabase build_crp_db(const Netlist& watermarked, const DigestPlan& plan, std::span<const Vector> challenges,
                         nlohmann::json meta) {
  if (challenges.empty()) throw std::invalid_argument("at least one challenge is required");
  std::set<Vector> distinct(challenges.begin(), challenges.end());
  if (distinct.size() != challenges.size()) throw std::invalid_argument("challenges must be distinct");

  CrpDatabase db;
  db.circuit_id = circuit_id(watermarked);
  db.digest_bits = plan.outputs.size();
  for (NetId n : watermarked.effective_inputs()) db.inputs.push_back(watermarked.net_name(n));
  db.digest_outputs = plan.output_names;
  db.meta = std::move(meta);
  const auto digests = digest_rows(watermarked, plan.outputs, challenges, 1);
  for (std::size_t i = 0; i < challenges.size(); ++i) db.entries.push_back(CrpEntry{challenges[i], digests[i]});
  return db;
}

std::string challenge_to_hex(const Vector& challenge) {
  const std::size_t width = challenge.size();
  const std::size_t digits = (width + 3) / 4;
  std::string hex(digits, '0');
  static constexpr char kHex[] = "0123456789abcdef";
  // Input j sits at bit position (width - 1 - j) of the number.
  for (std::size_t d = 0; d < digits; ++d) {
    unsigned nibble = 0;
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t pos = d * 4 + b;  // bit position from the LSB
      if (pos < width && challenge.get(width - 1 - pos)) nibble |= 1U << b;
    }
    hex[digits - 1 - d] = kHex[nibble];
  }
  return hex;
}

Vector challenge_from_hex(std::string_view hex, std::size_t width) {
  const std::size_t digits = (width + 3) / 4;
  if (hex.size() != digits) {
    throw std::invalid_argument("challenge '" + std::string(hex) + "' should have " + std::to_string(digits) +
                                " hex digits for " + std::to_string(width) + " inputs");
  }
  Vector v(width);
  for (std::size_t d = 0; d < digits; ++d) {
    const char c = hex[digits - 1 - d];
    unsigned nibble;
    if (c >= '0' && c <= '9') nibble = static_cast<unsigned>(c - '0');
    else if (c >= 'a' && c <= 'f') nibble = static_cast<unsigned>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') nibble = static_cast<unsigned>(c - 'A' + 10);
    else throw std::invalid_argument("bad hex digit in challenge '" + std::string(hex) + "'");
    for (std::size_t b = 0; b < 4; ++b) {
      const std::size_t pos = d * 4 + b;
      const bool bit = (nibble >> b) & 1U;
      if (pos < width) v.set(width - 1 - pos, bit);
      else if (bit) throw std::invalid_argument("challenge '" + std::string(hex) + "' exceeds input width");
    }
  }
  return v;
}

std::string digest_to_bits(const BitVector& digest) {
  std::string s(digest.size(), '0');
  for (std::size_t i = 0; i < digest.size(); ++i) s[i] = digest.get(i) ? '1' : '0';
  return s;
}

BitVector digest_from_bits(std::string_view bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw std::invalid_argument("digest must be a 0/1 string");
    v.set(i, bits[i] == '1');
  }
  return v;
}

nlohmann::json to_json(const CrpDatabase& db) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : db.entries) {
    entries.push_back({{"challenge", challenge_to_hex(e.challenge)}, {"digest", digest_to_bits(e.digest)}});
  }
  nlohmann::json meta = db.meta.is_object() ? db.meta : nlohmann::json::object();
  meta["digest_outputs"] = db.digest_outputs;
  return {{"version", 1},       {"circuit_id", db.circuit_id}, {"digest_bits", db.digest_bits},
          {"inputs", db.inputs}, {"entries", entries},          {"meta", meta}};
}

CrpDatabase crp_database_from_json(const nlohmann::json& doc) {
  if (doc.value("version", 0) != 1) throw std::invalid_argument("unsupported CRP database version");
  CrpDatabase db;
  db.circuit_id = doc.at("circuit_id").get<std::string>();
  db.digest_bits = doc.at("digest_bits").get<std::size_t>();
  db.inputs = doc.at("inputs").get<std::vector<std::string>>();
  db.meta = doc.value("meta", nlohmann::json::object());
  if (db.meta.contains("digest_outputs")) {
    db.digest_outputs = db.meta.at("digest_outputs").get<std::vector<std::string>>();
    db.meta.erase("digest_outputs");
  } else {
    for (std::size_t i = 0; i < db.digest_bits; ++i) db.digest_outputs.push_back(std::string(kDigestPrefix) + std::to_string(i));
  }
  if (db.digest_outputs.size() != db.digest_bits) throw std::invalid_argument("digest output list does not match width");
  for (const auto& e : doc.at("entries")) {
    CrpEntry entry{challenge_from_hex(e.at("challenge").get<std::string>(), db.inputs.size()),
                   digest_from_bits(e.at("digest").get<std::string>())};
    if (entry.digest.size() != db.digest_bits) throw std::invalid_argument("digest width mismatch in entry");
    db.entries.push_back(std::move(entry));
  }
  return db;
}

void write_crp_database(const CrpDatabase& db, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << to_json(db).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

CrpDatabase read_crp_database(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return crp_database_from_json(nlohmann::json::parse(in));
}

std::string_view to_string(Verdict v) { return v == Verdict::Authentic ? "AUTHENTIC" : "TAMPERED"; }

DetectionReport authenticate(const Netlist& under_test, const CrpDatabase& db, AuthenticateOptions options) {
  DetectionReport report;
  report.circuit_id_matches = circuit_id(under_test) == db.circuit_id;

  // Challenge bit for each effective input of the netlist under test, by name.
  std::vector<std::size_t> source;
  if (under_test.input_width() != db.inputs.size()) {
    report.input_mismatch = true;
    report.structural_issues.push_back("input width " + std::to_string(under_test.input_width()) +
                                       " differs from database width " + std::to_string(db.inputs.size()));
  } else {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < db.inputs.size(); ++j) pos.emplace(db.inputs[j], j);
    for (NetId n : under_test.effective_inputs()) {
      auto it = pos.find(under_test.net_name(n));
      if (it == pos.end()) {
        report.input_mismatch = true;
        report.structural_issues.push_back("input '" + under_test.net_name(n) + "' is not in the database");
      } else {
        source.push_back(it->second);
      }
    }
  }

  std::vector<NetId> outputs;
  std::set<NetId> pos_set(under_test.primary_outputs().begin(), under_test.primary_outputs().end());
  for (const auto& name : db.digest_outputs) {
    auto id = under_test.find_net(name);
    if (!id || !pos_set.contains(*id)) {
      report.structural_issues.push_back("digest output '" + name + "' is missing (removal evidence)");
    } else {
      outputs.push_back(*id);
    }
  }
  if (!report.structural_issues.empty()) {
    report.verdict = Verdict::Tampered;
    return report;
  }

  std::size_t count = db.entries.size();
  if (options.max_entries != 0) count = std::min(count, options.max_entries);
  std::vector<Vector> vectors;
  vectors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector v(under_test.input_width());
    for (std::size_t j = 0; j < source.size(); ++j) v.set(j, db.entries[i].challenge.get(source[j]));
    vectors.push_back(std::move(v));
  }
  const auto observed = digest_rows(under_test, outputs, vectors, options.threads);

  double fraction_sum = 0;
  for (std::size_t i = 0; i < count; ++i) {
    EntryOutcome e{observed[i], db.entries[i].digest, 0};
    for (std::size_t b = 0; b < db.digest_bits; ++b) e.mismatches += e.observed.get(b) != e.golden.get(b);
    if (e.mismatches) ++report.entries_mismatched;
    report.max_bit_mismatches = std::max(report.max_bit_mismatches, e.mismatches);
    fraction_sum += static_cast<double>(e.mismatches) / static_cast<double>(db.digest_bits);
    report.entries.push_back(std::move(e));
  }
  report.entries_checked = count;
  report.mean_bit_mismatch_fraction = count ? fraction_sum / static_cast<double>(count) : 0.0;
  report.verdict = report.entries_mismatched == 0 ? Verdict::Authentic : Verdict::Tampered;
  return report;
}

nlohmann::json to_json(const DetectionReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"observed", digest_to_bits(e.observed)},
                       {"golden", digest_to_bits(e.golden)},
                       {"mismatches", e.mismatches}});
  }
  return {{"verdict", to_string(report.verdict)},
          {"estimate", to_string(estimate_modification(report))},
          {"circuit_id_matches", report.circuit_id_matches},
          {"entries_checked", report.entries_checked},
          {"entries_mismatched", report.entries_mismatched},
          {"max_bit_mismatches", report.max_bit_mismatches},
          {"mean_bit_mismatch_fraction", report.mean_bit_mismatch_fraction},
          {"structural_issues", report.structural_issues},
          {"input_mismatch", report.input_mismatch},
          {"entries", entries}};
}

std::string_view to_string(ModificationSize s) {
  switch (s) {
    case ModificationSize::None: return "NONE";
    case ModificationSize::Small: return "SMALL";
    case ModificationSize::Large: return "LARGE";
  }
  return "?";
}

ModificationSize estimate_modification(const DetectionReport& report, ModificationThresholds thresholds) {
  if (!report.structural_issues.empty()) return ModificationSize::Large;
  if (report.entries_mismatched == 0) return ModificationSize::None;
  return report.max_bit_mismatches <= thresholds.small_max_bits ? ModificationSize::Small : ModificationSize::Large;
}

SignedDesign sign(const Netlist& netlist, const WatermarkConfig& config) {
  config.validate();
  const RandomVectorSet vectors = generate_vectors(netlist, config.vector_count, config.vector_seed);
  const TraceMatrix trace = simulate(netlist, vectors, SimOptions{config.threads});
  const BitVector baseline = default_row(netlist);
  const ActivityProfile act = activity(trace, baseline);

  ClusterOptions cluster_options;
  cluster_options.max_iters = config.max_iters;
  ClusterModel clusters = cluster_nets(trace, config.cluster_count(), config.select_seed, cluster_options);
  const auto scores = score_nets(netlist, act);
  SensitiveSet sensitive = select_sensitive(clusters, scores, config.threshold, config.select_seed);

  Watermarked wm = insert_digest(netlist, sensitive, config.digest_bits);
  const auto challenges = mine_challenges(trace, vectors, baseline, sensitive.nets(), config.challenge_count);
  nlohmann::json meta = {{"circuit", netlist.name()}, {"config", config.to_json()}};
  CrpDatabase db = build_crp_db(wm.netlist, wm.plan, challenges, std::move(meta));
  return SignedDesign{netlist, std::move(wm), std::move(sensitive), std::move(clusters), std::move(db)};
}

}  // namespace netmark
