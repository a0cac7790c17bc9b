#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "veracity/coordination.hpp"
#include "veracity/intent.hpp"
#include "veracity/synthetic.hpp"

using namespace veracity;
using namespace veracity::testing;

namespace {

ActorKey key(std::size_t i) { return {"x", "a" + std::to_string(i)}; }

/// Complete graph on `members` with uniform weight.
void add_clique(SimilarityGraph& g, const std::vector<std::size_t>& members, double w) {
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) g.edges.push_back({members[i], members[j], w});
  }
}

std::string sentence(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += "w" + std::to_string(i) + " ";
  return s;
}

}  // namespace

TEST(Traces, EventsPerCharacteristic) {
  auto it = make_item("i", "d", "a", 5);
  it.urls = {"http://u1", "http://u2"};
  it.hashtags = {"#tag"};
  auto corpus = Corpus::build({make_doc("d", "x")}, {it}, {make_actor("a"), make_actor("quiet")}, {});
  auto traces = extract_traces(corpus);
  ASSERT_EQ(traces.size(), 2u);
  EXPECT_EQ(traces[0].actor.actor_id, "a");
  EXPECT_EQ(traces[0].events.size(), 3u);
  EXPECT_TRUE(traces[1].events.empty());
}

TEST(Shingles, AppendedTokenStaysNearDuplicate) {
  auto base = sentence(20);
  auto a = shingles(base);
  auto b = shingles(base + "extra");
  EXPECT_EQ(a.size(), 18u);
  EXPECT_NEAR(jaccard(a, b), 18.0 / 19.0, 1e-12);
  EXPECT_GE(jaccard(a, b), 0.8);

  auto i1 = make_item("i1", "d", "a", 1);
  i1.text = base;
  auto i2 = make_item("i2", "d", "b", 2);
  i2.text = base + "extra";
  auto corpus = Corpus::build({make_doc("d", "x")}, {i1, i2}, {make_actor("a"), make_actor("b")}, {});
  auto traces = extract_traces(corpus);
  EXPECT_EQ(traces[0].events[0].value, traces[1].events[0].value);
  EXPECT_EQ(traces[0].events[0].kind, CharacteristicKind::TextShingle);
}

TEST(SimilarityGraph, RareSharedUrlWeight) {
  std::vector<ActorTrace> traces;
  for (std::size_t i = 0; i < 10; ++i) traces.push_back({key(i), {{CharacteristicKind::Hashtag, "#all", 100}}});
  traces[3].events.push_back({CharacteristicKind::Url, "http://rare", 200});
  traces[7].events.push_back({CharacteristicKind::Url, "http://rare", 230});
  auto g = build_similarity_graph(traces, 60);
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0].u, 3u);
  EXPECT_EQ(g.edges[0].v, 7u);
  EXPECT_NEAR(g.edges[0].weight, std::pow(std::log(5.0), 2), 1e-12);
  EXPECT_NEAR(g.weight(7, 3), 2.59, 0.01);
}

TEST(SimilarityGraph, NoSharedValueOrOutsideWindowGivesNoEdge) {
  std::vector<ActorTrace> traces{{key(0), {{CharacteristicKind::Url, "u", 0}}},
                                 {key(1), {{CharacteristicKind::Url, "u", 1000}}},
                                 {key(2), {{CharacteristicKind::Url, "v", 0}}},
                                 {key(3), {}}};
  EXPECT_TRUE(build_similarity_graph(traces, 60).edges.empty());
  EXPECT_THROW(build_similarity_graph(traces, 0), UsageError);
}

TEST(Communities, TwoCliquesJoinedByWeakEdge) {
  SimilarityGraph g;
  for (std::size_t i = 0; i < 10; ++i) g.nodes.push_back(key(i));
  add_clique(g, {0, 1, 2, 3, 4}, 10.0);
  add_clique(g, {5, 6, 7, 8, 9}, 10.0);
  g.edges.push_back({4, 5, 0.1});
  auto cs = detect_communities(g);
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].nodes, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(cs[1].nodes, (std::vector<std::size_t>{5, 6, 7, 8, 9}));
}

TEST(Communities, SingleCliqueHasFullExtent) {
  SimilarityGraph g;
  for (std::size_t i = 0; i < 6; ++i) g.nodes.push_back(key(i));
  add_clique(g, {0, 1, 2, 3, 4, 5}, 2.0);
  auto cs = detect_communities(g);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].nodes.size(), 6u);
  EXPECT_EQ(cs[0].extent, 1.0);
}

TEST(Communities, EdgelessAndInvalidOptions) {
  SimilarityGraph g;
  g.nodes = {key(0), key(1)};
  EXPECT_TRUE(detect_communities(g).empty());
  g.edges.push_back({0, 1, 1.0});
  CommunityOptions bad;
  bad.percentiles = {50, 10};
  EXPECT_THROW(detect_communities(g, bad), UsageError);
}

TEST(Communities, ExtentIsMonotoneInPersistence) {
  SimilarityGraph g;
  for (std::size_t i = 0; i < 12; ++i) g.nodes.push_back(key(i));
  add_clique(g, {0, 1, 2, 3, 4, 5}, 1.0);
  add_clique(g, {6, 7, 8, 9, 10, 11}, 1.0);
  // Heavier core inside the second group.
  for (auto& e : g.edges) {
    if (e.u >= 9 && e.v >= 9) e.weight = 5.0;
  }
  g.edges.push_back({5, 6, 0.5});
  double prev = 2.0;
  for (double persistence : {0.3, 0.5, 0.9, 1.0}) {
    CommunityOptions opt;
    opt.persistence = persistence;
    auto cs = detect_communities(g, opt);
    double worst = 1.0;
    for (const auto& c : cs) worst = std::min(worst, c.extent);
    EXPECT_LE(worst, prev);
    prev = worst;
  }
}

TEST(Ari, KnownValues) {
  std::vector<std::size_t> a{0, 0, 1, 1, 2, 2};
  std::vector<std::size_t> relabeled{5, 5, 3, 3, 9, 9};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(a, relabeled), 1.0);
  std::vector<std::size_t> b{0, 0, 0, 1, 1, 1};
  std::vector<std::size_t> c{0, 1, 0, 1, 0, 1};
  // Contingency of b vs c is [[2,1],[1,2]]: index 2, expected 36/15, max 6.
  EXPECT_NEAR(adjusted_rand_index(b, c), (2.0 - 2.4) / (6.0 - 2.4), 1e-12);
  EXPECT_THROW(adjusted_rand_index(a, std::span<const std::size_t>(b).subspan(0, 2)), UsageError);
}

TEST(Synchronization, IdenticalTimestampsScoreHigh) {
  std::vector<ActorTrace> traces{{key(0), {}}, {key(1), {}}, {key(2), {}}};
  for (std::size_t a = 0; a < 3; ++a) {
    for (int k = 0; k < 8; ++k) traces[a].events.push_back({CharacteristicKind::Url, "u", 5000});
  }
  std::vector<ActorKey> community{key(0), key(1), key(2)};
  double z = synchronization_score(community, traces, 60, 200, 1, std::pair<Timestamp, Timestamp>{0, 1'000'000});
  EXPECT_GT(z, 3.0);
  EXPECT_EQ(z, synchronization_score(community, traces, 60, 200, 1, std::pair<Timestamp, Timestamp>{0, 1'000'000}));
}

TEST(Synchronization, DegenerateCasesScoreZero) {
  std::vector<ActorTrace> traces{{key(0), {{CharacteristicKind::Url, "u", 10}}}, {key(1), {}}};
  std::vector<ActorKey> community{key(0), key(1)};
  EXPECT_EQ(synchronization_score(community, traces, 60, 100, 1), 0.0);
  std::vector<ActorKey> lone{key(0)};
  EXPECT_THROW(synchronization_score(lone, traces, 60, 100, 1), UsageError);
  EXPECT_THROW(synchronization_score(community, traces, 60, 10, 1), UsageError);
}

TEST(Synchronization, CrossActorPairsByHand) {
  // Actor 0 at 0 and 10, actor 1 at 5 and 100: cross pairs within 10 are (0,5) and (5,10).
  EXPECT_EQ(cross_actor_pairs({{0, 0}, {10, 0}, {5, 1}, {100, 1}}, 10), 2u);
}

TEST(CoordinationScan, PlantedClusterIsRecovered) {
  SynthConfig cfg;
  cfg.n_docs = 300;
  cfg.actors_per_platform = 80;
  cfg.alias_pairs = 0;
  cfg.clusters = {{12, Intent::Malicious, "x", 10}};
  auto syn = generate_synthetic(cfg, 21);
  CoordinationOptions opt;
  auto rep = coordination_scan(syn.corpus, opt);
  ASSERT_FALSE(rep.communities.empty());
  std::set<std::string> planted(syn.truth.clusters[0].actor_ids.begin(), syn.truth.clusters[0].actor_ids.end());
  const auto& top = rep.communities.front();
  std::size_t hit = 0;
  for (const auto& a : top.actors) hit += planted.contains(a.actor_id) ? 1 : 0;
  EXPECT_EQ(hit, 12u);
  EXPECT_EQ(top.actors.size(), 12u);
  EXPECT_GT(top.sync_z, 3.0);
  EXPECT_EQ(rep.to_json(), coordination_scan(syn.corpus, opt).to_json());
}
