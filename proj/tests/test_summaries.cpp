#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "layerscope/summaries.hpp"
#include "test_util.hpp"

using namespace layerscope;
using testutil::occurrence;

namespace {

std::vector<PointId> iota_ids(std::size_t from, std::size_t to) {
  std::vector<PointId> ids(to - from);
  std::iota(ids.begin(), ids.end(), from);
  return ids;
}

/// Certainty computed from first principles over a list of tags.
double brute_certainty(const std::vector<std::string>& tags, const std::vector<std::size_t>& members,
                       const std::string& label) {
  double in = 0, total = 0;
  for (std::size_t m : members) in += tags[m] == label;
  for (const auto& t : tags) total += t == label;
  return (in / total) * (in / total) * (in / members.size()) * (in / members.size());
}

}  // namespace

TEST(Certainty, PureAndExhaustive) {
  std::vector<TokenOccurrence> occ;
  for (std::size_t i = 0; i < 5; ++i) occ.push_back(occurrence(i, "cell", "NOUN"));
  for (std::size_t i = 5; i < 9; ++i) occ.push_back(occurrence(i, "cell", "VERB"));
  const auto ds = testutil::small_dataset(occ);
  const auto s = summarize_cluster(iota_ids(0, 5), FeatureKind::Pos, ds, iota_ids(0, 9));
  EXPECT_EQ(s.label, "NOUN");
  EXPECT_EQ(s.support, 5u);
  EXPECT_DOUBLE_EQ(s.certainty, 1.0);
}

TEST(Certainty, HalfOfSelection) {
  std::vector<TokenOccurrence> occ;
  for (std::size_t i = 0; i < 8; ++i) occ.push_back(occurrence(i, "cell", "NOUN"));
  const auto ds = testutil::small_dataset(occ);
  const auto s = summarize_cluster(iota_ids(0, 4), FeatureKind::Pos, ds, iota_ids(0, 8));
  EXPECT_DOUBLE_EQ(s.certainty, 0.25);
}

TEST(Certainty, TieGoesToSmallestLabel) {
  std::vector<TokenOccurrence> occ;
  for (std::size_t i = 0; i < 10; ++i) occ.push_back(occurrence(i, "run", i % 2 ? "VERB" : "NOUN"));
  for (std::size_t i = 10; i < 13; ++i) occ.push_back(occurrence(i, "run", "NOUN"));
  std::vector<std::string> tags;
  for (const auto& o : occ) tags.push_back(o.annotations.at(FeatureKind::Pos));
  const auto ds = testutil::small_dataset(occ);
  const auto s = summarize_cluster(iota_ids(0, 10), FeatureKind::Pos, ds, iota_ids(0, 13));
  EXPECT_EQ(s.label, "NOUN");
  EXPECT_EQ(s.support, 5u);
  std::vector<std::size_t> members(10);
  std::iota(members.begin(), members.end(), 0);
  EXPECT_DOUBLE_EQ(s.certainty, brute_certainty(tags, members, "NOUN"));  // (5/8)^2 (5/10)^2
}

TEST(Certainty, EmptyCluster) {
  const auto ds = testutil::small_dataset({occurrence(0, "a", "NOUN")});
  try {
    summarize_cluster({}, FeatureKind::Pos, ds, iota_ids(0, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCluster);
  }
}

TEST(Features, PassThrough) {
  const auto o = occurrence(3, "cell", "NOUN", "cell%1");
  EXPECT_EQ(extract_feature_values(o, FeatureKind::Pos), (std::vector<std::string>{"NOUN"}));
  EXPECT_EQ(extract_feature_values(o, FeatureKind::Sense), (std::vector<std::string>{"cell%1"}));
  EXPECT_EQ(extract_feature_values(o, FeatureKind::TokenIndex), (std::vector<std::string>{"1"}));
}

TEST(Features, NgramAtBoundary) {
  auto o = occurrence(0, "Cell");
  o.context_before = {"Of"};
  o.context_after = {"block"};
  EXPECT_EQ(extract_feature_values(o, FeatureKind::Ngram),
            (std::vector<std::string>{"of cell", "cell block", "of cell block"}));
}

TEST(Features, NgramFullWindow) {
  auto o = occurrence(0, "c");
  o.context_before = {"a", "b"};
  o.context_after = {"d", "e"};
  const auto g = extract_feature_values(o, FeatureKind::Ngram);
  EXPECT_EQ(g.size(), 4u + 3u);
  EXPECT_EQ(g.back(), "c d e");
}

TEST(Features, MissingSense) {
  const auto ds = testutil::small_dataset({occurrence(0, "a", "NOUN"), occurrence(1, "b", "VERB")});
  try {
    extract_feature_values(ds.occurrences[0], FeatureKind::Sense);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownFeature);
  }
  try {
    summarize_cluster(iota_ids(0, 2), FeatureKind::Sense, ds, iota_ids(0, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownFeature);
  }
}

TEST(Features, NgramCountsPointsNotOccurrences) {
  // "a a a" contains the bigram "a a" twice but counts once.
  auto o = occurrence(0, "a");
  o.context_before = {"a"};
  o.context_after = {"a"};
  auto p = occurrence(1, "b");
  p.context_before = {"a"};
  p.context_after = {"a"};
  const auto ds = testutil::small_dataset({o, p});
  const auto counts = count_feature_points(ds, iota_ids(0, 2), FeatureKind::Ngram);
  EXPECT_EQ(counts.at("a a"), 1u);
  EXPECT_EQ(counts.at("a b"), 1u);
  const auto s = summarize_cluster(iota_ids(0, 1), FeatureKind::Ngram, ds, iota_ids(0, 2));
  EXPECT_EQ(s.label, "a a");
  EXPECT_DOUBLE_EQ(s.certainty, 1.0);
}

TEST(Bands, Thresholds) {
  EXPECT_EQ(certainty_band(1.0), CertaintyBand::Green);
  EXPECT_EQ(certainty_band(2.0 / 3.0), CertaintyBand::Green);
  EXPECT_EQ(certainty_band(0.5), CertaintyBand::Yellow);
  EXPECT_EQ(certainty_band(1.0 / 3.0), CertaintyBand::Yellow);
  EXPECT_EQ(certainty_band(0.0), CertaintyBand::Red);
  EXPECT_EQ(to_string(CertaintyBand::Yellow), "YELLOW");
  for (double bad : {-0.01, 1.01, std::nan("")}) {
    try {
      certainty_band(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
    }
  }
}

TEST(Property, CertaintyMatchesBruteForce) {
  std::mt19937 rng(8);
  const std::vector<std::string> vocab{"ADJ", "NOUN", "VERB"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 25;
    std::vector<TokenOccurrence> occ;
    std::vector<std::string> tags;
    for (std::size_t i = 0; i < n; ++i) {
      tags.push_back(vocab[rng() % vocab.size()]);
      occ.push_back(occurrence(i, "w", tags.back()));
    }
    const auto ds = testutil::small_dataset(occ, 1, 2);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 2) members.push_back(i);
    if (members.empty()) members.push_back(0);
    std::map<std::string, std::size_t> freq;
    for (auto m : members) ++freq[tags[m]];
    std::string label;
    std::size_t best = 0;
    for (const auto& v : vocab)
      if (freq[v] > best) best = freq[v], label = v;

    std::vector<PointId> ids(members.begin(), members.end());
    const auto s = summarize_cluster(ids, FeatureKind::Pos, ds, iota_ids(0, n));
    EXPECT_EQ(s.label, label);
    EXPECT_EQ(s.support, best);
    EXPECT_NEAR(s.certainty, brute_certainty(tags, members, label), 1e-15);
    EXPECT_GE(s.certainty, 0.0);
    EXPECT_LE(s.certainty, 1.0);
    const bool pure = best == members.size();
    const bool exhaustive = best == static_cast<std::size_t>(std::count(tags.begin(), tags.end(), label));
    EXPECT_EQ(s.certainty == 1.0, pure && exhaustive);

    std::shuffle(ids.begin(), ids.end(), rng);
    const auto t = summarize_cluster(ids, FeatureKind::Pos, ds, iota_ids(0, n));
    EXPECT_EQ(t.label, s.label);
    EXPECT_EQ(t.certainty, s.certainty);
  }
}

TEST(Property, MonotoneInClusterCount) {
  // Fixed cluster of 10 and 12 NOUNs in the selection; raise how many
  // members are NOUN.
  double previous = -1.0;
  for (std::size_t in = 6; in <= 10; ++in) {
    std::vector<TokenOccurrence> occ;
    for (std::size_t i = 0; i < 10; ++i) occ.push_back(occurrence(i, "w", i < in ? "NOUN" : "VERB"));
    for (std::size_t i = 10; i < 10 + (12 - in); ++i) occ.push_back(occurrence(i, "w", "NOUN"));
    const auto ds = testutil::small_dataset(occ, 1, 2);
    const auto s = summarize_cluster(iota_ids(0, 10), FeatureKind::Pos, ds, iota_ids(0, occ.size()));
    ASSERT_EQ(s.label, "NOUN");
    EXPECT_GE(s.certainty, previous);
    previous = s.certainty;
  }
}
