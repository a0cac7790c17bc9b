#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "veracity/features.hpp"
#include "veracity/synthetic.hpp"

using namespace veracity;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_docs = 100;
  cfg.actors_per_platform = 60;
  cfg.alias_pairs = 5;
  return cfg;
}

}  // namespace

TEST(Synthetic, SameSeedIsByteIdentical) {
  auto a = generate_synthetic(small_config(), 11);
  auto b = generate_synthetic(small_config(), 11);
  EXPECT_EQ(serialize_corpus(a.corpus), serialize_corpus(b.corpus));
  EXPECT_EQ(a.truth.to_jsonl(), b.truth.to_jsonl());
}

TEST(Synthetic, DifferentSeedsGiveDifferentItems) {
  std::set<std::multiset<std::string>> seen;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto s = generate_synthetic(small_config(), seed);
    std::multiset<std::string> ids;
    for (const auto& it : s.corpus.items()) ids.insert(it.item_id + "@" + std::to_string(it.timestamp));
    seen.insert(ids);
  }
  EXPECT_EQ(seen.size(), 5u);
}

TEST(Synthetic, ExactDocumentCount) {
  auto s = generate_synthetic(small_config(), 2);
  EXPECT_EQ(s.corpus.documents().size(), 100u);
  EXPECT_EQ(s.truth.documents.size(), 100u);
}

TEST(Synthetic, PlantedClusterIsListedInSidecar) {
  auto cfg = small_config();
  cfg.clusters = {{20, Intent::Malicious, "x", 6}};
  auto s = generate_synthetic(cfg, 4);
  ASSERT_EQ(s.truth.clusters.size(), 1u);
  const auto& c = s.truth.clusters[0];
  EXPECT_EQ(c.actor_ids.size(), 20u);
  EXPECT_EQ(std::set<std::string>(c.actor_ids.begin(), c.actor_ids.end()).size(), 20u);
  for (const auto& id : c.actor_ids) EXPECT_NE(s.corpus.find_actor({c.platform, id}), nullptr);
}

TEST(Synthetic, SidecarTokenCountMatchesWordCount) {
  auto s = generate_synthetic(small_config(), 6);
  for (const auto& t : s.truth.documents) EXPECT_EQ(word_count(s.corpus.document(t.doc_id)), t.token_count);
}

TEST(Synthetic, SidecarRoundTrips) {
  auto cfg = small_config();
  cfg.clusters = {{8, Intent::Benign, "fb", 4}};
  auto s = generate_synthetic(cfg, 8);
  std::istringstream in(s.truth.to_jsonl());
  EXPECT_EQ(GroundTruth::parse(in), s.truth);
}

TEST(Synthetic, ShortDocumentsCarryTheLabelNoise) {
  SynthConfig cfg;
  cfg.n_docs = 2000;
  cfg.alias_pairs = 0;
  auto s = generate_synthetic(cfg, 1);
  std::size_t short_n = 0, short_flip = 0, long_flip = 0;
  for (const auto& t : s.truth.documents) {
    if (t.token_count < cfg.short_doc_tokens) {
      ++short_n;
      short_flip += t.label_noised ? 1 : 0;
    } else {
      long_flip += t.label_noised ? 1 : 0;
    }
  }
  EXPECT_GT(short_n, 0u);
  EXPECT_EQ(long_flip, 0u);
  double rate = static_cast<double>(short_flip) / static_cast<double>(short_n);
  EXPECT_NEAR(rate, cfg.short_label_noise, 0.06);
}

TEST(Synthetic, InvalidConfigIsUsageError) {
  auto cfg = small_config();
  cfg.homophily = 1.5;
  EXPECT_THROW(generate_synthetic(cfg, 1), UsageError);
  cfg = small_config();
  cfg.clusters = {{500, Intent::Malicious, "x", 2}};
  EXPECT_THROW(generate_synthetic(cfg, 1), UsageError);
  cfg = small_config();
  cfg.clusters = {{5, Intent::Malicious, "nowhere", 2}};
  EXPECT_THROW(generate_synthetic(cfg, 1), UsageError);
}
