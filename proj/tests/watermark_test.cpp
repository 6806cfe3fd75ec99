#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "netmark/tamper.hpp"
#include "netmark/watermark.hpp"
#include "support/oracles.hpp"

namespace netmark {
namespace {

std::vector<NetId> first_nets(const Netlist& n, std::size_t count) {
  std::vector<NetId> out;
  for (std::size_t i = 0; i < count; ++i) out.emplace_back(i);
  return out;
}

TEST(InsertDigest, TwoNetsOneBit) {
  const Netlist n = parse_bench(oracle::kFigureCircuit);
  const std::vector<NetId> s{*n.find_net("N11"), *n.find_net("N19")};
  const Watermarked wm = insert_digest(n, s, 1);
  EXPECT_EQ(wm.netlist.gate_count(), n.gate_count() + 1);
  EXPECT_EQ(wm.plan.inserted_gates, 1u);
  const Gate& g = wm.netlist.gates().back();
  EXPECT_EQ(g.function, GateFunction::Xor);
  EXPECT_EQ(wm.netlist.net_name(g.output), "SIGNED_DIGEST_0");
  EXPECT_EQ(wm.netlist.net_name(g.inputs[0]), "N11");
  EXPECT_EQ(wm.netlist.net_name(g.inputs[1]), "N19");
  EXPECT_EQ(wm.netlist.primary_outputs().size(), 3u);
}

TEST(InsertDigest, ThirtyTwoNetsFourBits) {
  const Netlist n = read_bench_file(oracle::corpus_dir() / "c880.bench");
  const auto s = first_nets(n, 32);
  const Watermarked wm = insert_digest(n, s, 4);
  EXPECT_EQ(wm.netlist.gate_count(), n.gate_count() + 28);
  ASSERT_EQ(wm.plan.groups.size(), 4u);
  for (std::size_t b = 0; b < 4; ++b) {
    ASSERT_EQ(wm.plan.groups[b].size(), 8u);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(wm.plan.groups[b][j], s[j * 4 + b]);
  }
  EXPECT_EQ(wm.plan.output_names[3], "SIGNED_DIGEST_3");
  // Original content keeps its handles.
  for (std::size_t i = 0; i < n.net_count(); ++i) EXPECT_EQ(wm.netlist.net_name(NetId(i)), n.net_name(NetId(i)));
}

TEST(InsertDigest, DigestValuesAreParities) {
  const Netlist n = read_bench_file(oracle::corpus_dir() / "c432.bench");
  const auto s = first_nets(n, 12);
  const Watermarked wm = insert_digest(n, s, 3);
  const auto set = generate_vectors(n, 50, 6);
  for (const auto& v : set.vectors) {
    const auto ref = oracle::interpret(n, v);
    const BitVector row = simulate_vector(wm.netlist, v);
    for (std::size_t b = 0; b < 3; ++b) {
      int parity = 0;
      for (NetId x : wm.plan.groups[b]) parity ^= ref[x.index()];
      EXPECT_EQ(row.get(wm.plan.outputs[b].index()), parity != 0);
    }
  }
}

TEST(InsertDigest, DegenerateGroups) {
  const Netlist n = parse_bench(oracle::kFigureCircuit);
  const std::vector<NetId> s{*n.find_net("N11"), *n.find_net("N19"), *n.find_net("N7")};
  const Watermarked wm = insert_digest(n, s, 3);
  EXPECT_EQ(wm.netlist.gate_count(), n.gate_count());
  EXPECT_EQ(wm.plan.output_names, (std::vector<std::string>{"N11", "N19", "N7"}));
  // N19 was already an output; N11 and N7 are added.
  EXPECT_EQ(wm.netlist.primary_outputs().size(), 4u);
  EXPECT_THROW(insert_digest(n, s, 4), std::invalid_argument);
  EXPECT_THROW(insert_digest(n, s, 0), std::invalid_argument);
}

TEST(InsertDigest, RejectsPrefixCollision) {
  const Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(SIGNED_DIGEST_0)\nSIGNED_DIGEST_0 = AND(a, b)\n");
  const std::vector<NetId> s{NetId(0u), NetId(1u)};
  EXPECT_THROW(insert_digest(n, s, 1), std::invalid_argument);
}

TEST(MineChallenges, ConstantNetsFallBackToIndexOrder) {
  const Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nna = NOT(a)\nz = AND(a, na)\n");
  const auto set = generate_vectors(n, 20, 1);
  const TraceMatrix t = simulate(n, set);
  const std::vector<NetId> sensitive{*n.find_net("z")};
  const auto c = mine_challenges(t, set, default_row(n), sensitive, 3);
  std::vector<Vector> expected;
  for (const auto& v : set.vectors) {
    if (std::find(expected.begin(), expected.end(), v) == expected.end()) expected.push_back(v);
    if (expected.size() == 3) break;
  }
  EXPECT_EQ(c, expected);
}

TEST(MineChallenges, FigureVectorTogglingBothRanksFirst) {
  const Netlist n = parse_bench(oracle::kFigureCircuit);
  RandomVectorSet set;
  set.width = 5;
  set.vectors = {oracle::make_vector({1, 1, 1, 1, 1}), oracle::make_vector({1, 1, 0, 1, 1}),
                 oracle::make_vector({1, 1, 0, 1, 0})};
  const TraceMatrix t = simulate(n, set);
  const std::vector<NetId> s{*n.find_net("N11"), *n.find_net("N19")};
  const auto scores = challenge_scores(t, default_row(n), s);
  EXPECT_EQ(scores, (std::vector<std::size_t>{1, 2, 1}));
  const auto c = mine_challenges(t, set, default_row(n), s, 3);
  EXPECT_EQ(c[0], set.vectors[1]);
  EXPECT_EQ(c[1], set.vectors[0]);
  EXPECT_EQ(mine_challenges(t, set, default_row(n), s, 1), std::vector<Vector>{set.vectors[1]});
}

TEST(MineChallenges, Errors) {
  const Netlist n = parse_bench(oracle::kAndCircuit);
  const auto set = generate_vectors(n, 40, 1);
  const TraceMatrix t = simulate(n, set);
  const std::vector<NetId> s{*n.find_net("y")};
  EXPECT_THROW(mine_challenges(t, set, default_row(n), s, 0), std::invalid_argument);
  EXPECT_THROW(mine_challenges(t, set, default_row(n), s, 5), std::invalid_argument);
  EXPECT_EQ(mine_challenges(t, set, default_row(n), s, 4).size(), 4u);
}

TEST(CrpDatabase, FigureDigestIsXorOfSensitiveNets) {
  const Netlist n = parse_bench(oracle::kFigureCircuit);
  const std::vector<NetId> s{*n.find_net("N11"), *n.find_net("N19")};
  const Watermarked wm = insert_digest(n, s, 1);
  // (1,1,0,1,1): N11 = 1, N19 = 1, digest 0. (1,0,1,1,0): N11 = 1, N19 = 0, digest 1.
  const std::vector<Vector> challenges{oracle::make_vector({1, 1, 0, 1, 1}), oracle::make_vector({1, 0, 1, 1, 0})};
  const CrpDatabase db = build_crp_db(wm.netlist, wm.plan, challenges);
  ASSERT_EQ(db.entries.size(), 2u);
  EXPECT_FALSE(db.entries[0].digest.get(0));
  EXPECT_TRUE(db.entries[1].digest.get(0));
  EXPECT_THROW(build_crp_db(wm.netlist, wm.plan, {}), std::invalid_argument);
  const std::vector<Vector> dup{challenges[0], challenges[0]};
  EXPECT_THROW(build_crp_db(wm.netlist, wm.plan, dup), std::invalid_argument);
}

TEST(CrpDatabase, HexEncoding) {
  // Input 0 is the most significant bit.
  EXPECT_EQ(challenge_to_hex(oracle::make_vector({1, 0, 0, 0, 0})), "10");
  EXPECT_EQ(challenge_to_hex(oracle::make_vector({0, 0, 0, 0, 1})), "01");
  EXPECT_EQ(challenge_to_hex(oracle::make_vector({1, 0, 1, 0})), "a");
  EXPECT_EQ(challenge_from_hex("10", 5), oracle::make_vector({1, 0, 0, 0, 0}));
  EXPECT_EQ(challenge_from_hex("A", 4), oracle::make_vector({1, 0, 1, 0}));
  EXPECT_THROW(challenge_from_hex("20", 5), std::invalid_argument);
  EXPECT_THROW(challenge_from_hex("1", 5), std::invalid_argument);
  EXPECT_THROW(challenge_from_hex("g0", 5), std::invalid_argument);
  const auto set = generate_vectors(207, 20, 3);
  for (const auto& v : set.vectors) EXPECT_EQ(challenge_from_hex(challenge_to_hex(v), 207), v);
  EXPECT_EQ(digest_to_bits(oracle::make_vector({1, 0, 0, 1})), "1001");
  EXPECT_EQ(digest_from_bits("0110"), oracle::make_vector({0, 1, 1, 0}));
  EXPECT_THROW(digest_from_bits("012"), std::invalid_argument);
}

TEST(CircuitId, IgnoresNameHeader) {
  const Netlist a = parse_bench(oracle::kAndCircuit, "one");
  const Netlist b = parse_bench(oracle::kAndCircuit, "two");
  EXPECT_EQ(circuit_id(a), circuit_id(b));
  EXPECT_EQ(circuit_id(a).size(), 64u);
  EXPECT_NE(circuit_id(a), circuit_id(parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = OR(a, b)\n")));
}

class SignedC880 : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    original_ = new Netlist(read_bench_file(oracle::corpus_dir() / "c880.bench"));
    WatermarkConfig config;
    config.vector_count = 4000;
    design_ = new SignedDesign(sign(*original_, config));
  }
  static void TearDownTestSuite() {
    delete design_;
    delete original_;
  }
  static Netlist* original_;
  static SignedDesign* design_;
};

Netlist* SignedC880::original_ = nullptr;
SignedDesign* SignedC880::design_ = nullptr;

TEST_F(SignedC880, GoldenAuthenticates) {
  const auto report = authenticate(design_->watermarked.netlist, design_->db);
  EXPECT_EQ(report.verdict, Verdict::Authentic);
  EXPECT_EQ(report.entries_mismatched, 0u);
  EXPECT_EQ(report.entries_checked, 100u);
  EXPECT_TRUE(report.circuit_id_matches);
  EXPECT_EQ(estimate_modification(report), ModificationSize::None);
}

TEST_F(SignedC880, SelectionShape) {
  EXPECT_EQ(design_->sensitive.size(), 32u);
  EXPECT_EQ(design_->watermarked.netlist.gate_count(), original_->gate_count() + 28);
  EXPECT_EQ(design_->db.digest_bits, 4u);
  EXPECT_EQ(design_->db.inputs.size(), original_->input_width());
}

TEST_F(SignedC880, InvertedDigestOutputMismatchesEveryEntry) {
  NetlistParts parts = design_->watermarked.netlist.parts();
  const NetId d1 = *design_->watermarked.netlist.find_net("SIGNED_DIGEST_1");
  for (Gate& g : parts.gates) {
    if (g.output == d1) g.function = GateFunction::Xnor;
  }
  const Netlist flipped(std::move(parts));
  const auto report = authenticate(flipped, design_->db);
  EXPECT_EQ(report.verdict, Verdict::Tampered);
  EXPECT_EQ(report.entries_mismatched, report.entries_checked);
  for (const auto& e : report.entries) {
    EXPECT_EQ(e.mismatches, 1u);
    EXPECT_NE(e.observed.get(1), e.golden.get(1));
  }
  EXPECT_FALSE(report.circuit_id_matches);
  EXPECT_EQ(estimate_modification(report), ModificationSize::Small);
}

TEST_F(SignedC880, AllBitsMismatchingIsLarge) {
  NetlistParts parts = design_->watermarked.netlist.parts();
  for (Gate& g : parts.gates) {
    if (parts.net_names[g.output.index()].starts_with(kDigestPrefix) &&
        parts.net_names[g.output.index()].size() == kDigestPrefix.size() + 1) {
      g.function = GateFunction::Xnor;
    }
  }
  const auto report = authenticate(Netlist(std::move(parts)), design_->db);
  EXPECT_EQ(report.max_bit_mismatches, 4u);
  EXPECT_EQ(estimate_modification(report), ModificationSize::Large);
}

TEST_F(SignedC880, MissingDigestOutputIsRemovalEvidence) {
  const auto report = authenticate(*original_, design_->db);
  EXPECT_EQ(report.verdict, Verdict::Tampered);
  EXPECT_FALSE(report.structural_issues.empty());
  EXPECT_FALSE(report.input_mismatch);
  EXPECT_EQ(report.entries_checked, 0u);
  EXPECT_EQ(estimate_modification(report), ModificationSize::Large);
}

TEST_F(SignedC880, InputMismatch) {
  const auto report = authenticate(parse_bench(oracle::kAndCircuit), design_->db);
  EXPECT_TRUE(report.input_mismatch);
  EXPECT_EQ(report.verdict, Verdict::Tampered);
}

TEST_F(SignedC880, ReorderedInputsAreMappedByName) {
  NetlistParts parts = design_->watermarked.netlist.parts();
  std::reverse(parts.primary_inputs.begin(), parts.primary_inputs.end());
  const auto report = authenticate(Netlist(std::move(parts)), design_->db);
  EXPECT_EQ(report.verdict, Verdict::Authentic);
  EXPECT_FALSE(report.circuit_id_matches);
}

TEST_F(SignedC880, MaxEntriesPrefix) {
  const auto report = authenticate(design_->watermarked.netlist, design_->db, {10, 1});
  EXPECT_EQ(report.entries_checked, 10u);
}

TEST_F(SignedC880, JsonRoundTripAndByteIdenticalRebuild) {
  const std::string text = to_json(design_->db).dump(2);
  const CrpDatabase back = crp_database_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(to_json(back).dump(2), text);
  const auto doc = nlohmann::json::parse(text);
  EXPECT_EQ(doc.at("version"), 1);
  EXPECT_EQ(doc.at("entries").size(), 100u);
  EXPECT_EQ(doc.at("entries")[0].at("challenge").get<std::string>().size(), (original_->input_width() + 3) / 4);

  WatermarkConfig config;
  config.vector_count = 4000;
  const SignedDesign again = sign(*original_, config);
  EXPECT_EQ(to_json(again.db).dump(2), text);
  EXPECT_EQ(serialize_bench(again.watermarked.netlist), serialize_bench(design_->watermarked.netlist));

  const auto path = std::filesystem::temp_directory_path() / "netmark_db_roundtrip.json";
  write_crp_database(design_->db, path);
  EXPECT_EQ(to_json(read_crp_database(path)).dump(2), text);
  std::filesystem::remove(path);
}

TEST_F(SignedC880, FunctionallyTransparent) {
  EXPECT_NE(is_functionally_changed(*original_, design_->watermarked.netlist, 10000, 5), Equivalence::Changed);
}

TEST(DetectionReport, Json) {
  DetectionReport r;
  r.entries_checked = 3;
  const auto doc = to_json(r);
  EXPECT_EQ(doc.at("verdict"), "AUTHENTIC");
  EXPECT_EQ(doc.at("estimate"), "NONE");
}

TEST(WatermarkConfig, Validation) {
  WatermarkConfig c;
  EXPECT_EQ(c.cluster_count(), 32u);
  EXPECT_NO_THROW(c.validate());
  c.threshold = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.challenge_count = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Sign, ScanCircuitGoldenAuthenticates) {
  const Netlist n = read_bench_file(oracle::data_dir() / "s27.bench");
  WatermarkConfig c;
  c.digest_bits = 2;
  c.group_size = 2;
  c.challenge_count = 10;
  c.vector_count = 500;
  const SignedDesign d = sign(n, c);
  EXPECT_EQ(d.watermarked.netlist.gate_count(), n.gate_count() + 2);
  EXPECT_EQ(authenticate(d.watermarked.netlist, d.db).verdict, Verdict::Authentic);
  EXPECT_EQ(is_functionally_changed(n, d.watermarked.netlist, 0), Equivalence::ProvenEqual);
}

}  // namespace
}  // namespace netmark
