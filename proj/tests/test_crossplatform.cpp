#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "support.hpp"
#include "veracity/crossplatform.hpp"
#include "veracity/synthetic.hpp"

using namespace veracity;
using namespace veracity::testing;

namespace {

Actor person(std::string id, std::string platform, std::string handle, std::string name) {
  auto a = make_actor(std::move(id), std::move(platform));
  a.handle = std::move(handle);
  a.display_name = std::move(name);
  return a;
}

/// Filler actors so that a URL shared by two actors counts as rare.
void add_fillers(std::vector<Actor>& actors, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    actors.push_back(person("f" + std::to_string(i), i % 2 ? "x" : "fb", "filler" + std::to_string(i) + "q",
                            "Zz Filler " + std::to_string(i)));
  }
}

class ThrowingFetcher : public Fetcher {
 public:
  std::string name() const override { return "broken"; }
  std::vector<std::string> platforms() const override { return {"x"}; }
  std::vector<LabelSource> fetch_label(const DocumentRecord&) const override { throw DataError("offline"); }
  std::vector<EngagementItem> fetch_context(const DocumentRecord&, const std::string&) const override {
    throw DataError("offline");
  }
};

}  // namespace

TEST(JaroWinkler, ReferenceValues) {
  EXPECT_NEAR(jaro_similarity("jon smith", "john smith"), 0.966667, 1e-6);
  EXPECT_NEAR(jaro_winkler_similarity("jon smith", "john smith"), 0.973333, 1e-6);
  EXPECT_NEAR(jaro_winkler_similarity("MARTHA", "MARHTA"), 0.961111, 1e-6);
  EXPECT_NEAR(jaro_winkler_similarity("DWAYNE", "DUANE"), 0.84, 1e-6);
  EXPECT_NEAR(jaro_winkler_similarity("DIXON", "DICKSONX"), 0.813333, 1e-6);
  EXPECT_EQ(jaro_winkler_similarity("same", "same"), 1.0);
  EXPECT_EQ(jaro_similarity("abc", "xyz"), 0.0);
  EXPECT_EQ(jaro_similarity("", ""), 1.0);
  EXPECT_THROW(jaro_winkler_similarity("a", "b", 0.3), UsageError);
}

TEST(JaroWinkler, SymmetricAndBounded) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> len(0, 9), ch('a', 'e');
  for (int k = 0; k < 500; ++k) {
    std::string a, b;
    for (int i = len(rng); i > 0; --i) a.push_back(static_cast<char>(ch(rng)));
    for (int i = len(rng); i > 0; --i) b.push_back(static_cast<char>(ch(rng)));
    double s = jaro_winkler_similarity(a, b);
    EXPECT_DOUBLE_EQ(s, jaro_winkler_similarity(b, a));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_GE(s, jaro_similarity(a, b));
  }
}

TEST(Linking, NormalizedHandlesMatch) {
  EXPECT_EQ(normalize_handle("@J_Smith"), "jsmith");
  std::vector<Actor> actors{person("1", "x", "J_Smith", "J"), person("2", "fb", "jsmith", "Someone Else")};
  auto clusters = link_entities(actors, {});
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].members.size(), 2u);
  EXPECT_EQ(clusters[0].evidence.size(), 1u);
  EXPECT_EQ(clusters[0].evidence[0].rfind("handle", 0), 0u);
}

TEST(Linking, SamePlatformIsNeverLinked) {
  std::vector<Actor> actors{person("1", "x", "jsmith", "J"), person("2", "x", "j.smith", "J")};
  EXPECT_EQ(link_entities(actors, {}).size(), 2u);
}

TEST(Linking, DisjointActorsStaySingletons) {
  std::vector<Actor> actors{person("1", "x", "alpha", "Alice Alpha"), person("2", "fb", "bravo", "Bob Bravo")};
  ActorUrls urls{{{"x", "1"}, {"http://a"}}, {{"fb", "2"}, {"http://b"}}};
  auto clusters = link_entities(actors, urls);
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].cluster_id, "e0");
  EXPECT_EQ(clusters[1].cluster_id, "e1");
}

TEST(Linking, SimilarNamesWithRareUrls) {
  std::vector<Actor> actors{person("1", "x", "jonny", "Jon Smith"), person("2", "fb", "jsmith77", "John Smith")};
  add_fillers(actors, 6);
  ActorUrls urls{{{"x", "1"}, {"http://r1", "http://r2"}}, {{"fb", "2"}, {"http://r1", "http://r2"}}};
  auto clusters = link_entities(actors, urls);
  std::size_t linked = 0;
  for (const auto& c : clusters) {
    if (c.members.size() == 2) {
      ++linked;
      EXPECT_EQ(c.evidence[0].rfind("name+urls", 0), 0u);
    }
  }
  EXPECT_EQ(linked, 1u);

  // One shared rare URL is not enough.
  urls[{"fb", "2"}] = {"http://r1"};
  for (const auto& c : link_entities(actors, urls)) EXPECT_EQ(c.members.size(), 1u);
}

TEST(Linking, CommonUrlsAreNotEvidence) {
  std::vector<Actor> actors{person("1", "x", "jonny", "Jon Smith"), person("2", "fb", "jsmith77", "John Smith"),
                            person("3", "x", "other", "Zed"), person("4", "fb", "another", "Quin")};
  ActorUrls urls;
  for (const auto& a : actors) urls[a.key()] = {"http://common1", "http://common2"};
  for (const auto& c : link_entities(actors, urls)) EXPECT_EQ(c.members.size(), 1u);
}

TEST(Linking, SyntheticAliasesArePermutationInvariant) {
  SynthConfig cfg;
  cfg.n_docs = 200;
  cfg.actors_per_platform = 60;
  cfg.alias_pairs = 10;
  auto syn = generate_synthetic(cfg, 13);
  auto urls = actor_urls(syn.corpus);
  std::vector<Actor> actors(syn.corpus.actors().begin(), syn.corpus.actors().end());
  auto reference = link_entities(actors, urls);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(actors.begin(), actors.end(), rng);
    EXPECT_EQ(link_entities(actors, urls), reference);
  }
  std::set<std::pair<ActorKey, ActorKey>> found;
  for (const auto& c : reference) {
    for (std::size_t i = 0; i < c.members.size(); ++i) {
      for (std::size_t j = i + 1; j < c.members.size(); ++j) found.emplace(c.members[i], c.members[j]);
    }
  }
  for (const auto& p : syn.truth.aliases) {
    EXPECT_TRUE(found.contains({std::min(p.a, p.b), std::max(p.a, p.b)})) << p.a.str() << " " << p.b.str();
  }
}

TEST(Packages, CountsAndMajority) {
  auto doc = make_doc("d", "body");
  std::ostringstream fx;
  for (int i = 0; i < 3; ++i) {
    fx << R"({"kind":"item","doc_id":"d","item_id":"x)" << i << R"(","actor_id":"a","platform":"x","timestamp":)" << i
       << "}\n";
  }
  for (int i = 0; i < 5; ++i) {
    fx << R"({"kind":"item","doc_id":"d","item_id":"f)" << i << R"(","actor_id":"b","platform":"fb","timestamp":)"
       << i << "}\n";
  }
  fx << R"({"kind":"label","doc_id":"d","source":"s1","label":"false"})" << "\n";
  fx << R"({"kind":"label","doc_id":"d","source":"s2","label":"false"})" << "\n";
  fx << R"({"kind":"label","doc_id":"d","source":"s3","label":"true"})" << "\n";
  fx << R"({"kind":"label","doc_id":"other","source":"s1","label":"true"})" << "\n";
  std::istringstream in(fx.str());
  auto fetcher = FileFetcher::parse(in, "mock");
  EXPECT_EQ(fetcher.platforms(), (std::vector<std::string>{"fb", "x"}));

  ThrowingFetcher broken;
  std::vector<const Fetcher*> fetchers{&fetcher, &broken};
  auto pkg = merge_document_package(doc, fetchers);
  EXPECT_EQ(pkg.engagement_count(), 8u);
  EXPECT_EQ(pkg.per_platform_engagements.size(), 2u);
  EXPECT_EQ(pkg.per_platform_engagements.at("x").size(), 3u);
  EXPECT_EQ(pkg.per_platform_engagements.at("fb").size(), 5u);
  EXPECT_EQ(pkg.merged_label, Label::False);
  EXPECT_EQ(pkg.warnings.size(), 2u);
  EXPECT_EQ(package_to_json(pkg).at("format"), "veracity-package");
}

TEST(Packages, MajorityTieAndEmptyAreUnknown) {
  std::vector<LabelSource> tie{{"a", Label::False}, {"b", Label::True}};
  EXPECT_EQ(majority_label(tie), Label::Unknown);
  EXPECT_EQ(majority_label(std::vector<LabelSource>{}), Label::Unknown);
  std::vector<LabelSource> win{{"a", Label::True}, {"b", Label::True}, {"c", Label::Unknown}};
  EXPECT_EQ(majority_label(win), Label::True);
}

TEST(Packages, CorpusFetcherGroupsByPlatform) {
  auto corpus = Corpus::build({make_doc("d", "x")},
                              {make_item("i1", "d", "a", 1, "x"), make_item("i2", "d", "b", 2, "fb"),
                               make_item("i3", "d", "a", 3, "x")},
                              {make_actor("a", "x"), make_actor("b", "fb")}, {});
  CorpusFetcher cf(corpus);
  std::vector<const Fetcher*> fetchers{&cf};
  auto pkg = merge_document_package(corpus.document("d"), fetchers);
  EXPECT_EQ(pkg.engagement_count(), 3u);
  EXPECT_EQ(pkg.per_platform_engagements.at("x").size(), 2u);
  EXPECT_EQ(pkg.merged_label, Label::Unknown);
  EXPECT_TRUE(pkg.warnings.empty());
}

TEST(FileFetcher, MalformedLinesAreDataErrors) {
  std::istringstream bad("{\"kind\":\"label\",\"doc_id\":\"d\"}\n");
  EXPECT_THROW(FileFetcher::parse(bad, "m"), DataError);
  std::istringstream kind("{\"kind\":\"poll\",\"doc_id\":\"d\"}\n");
  EXPECT_THROW(FileFetcher::parse(kind, "m"), DataError);
  EXPECT_THROW(FileFetcher::load("/nonexistent/fixture.jsonl"), DataError);
}

TEST(LabelFixtures, AccuracyOneReproducesLabels) {
  auto corpus = Corpus::build({make_doc("a", "x", 0, Label::False), make_doc("b", "x", 0, Label::True)}, {}, {}, {});
  std::vector<std::string> sources{"s1", "s2", "s3"};
  std::istringstream in(make_label_fixtures(corpus, sources, 1.0, 3));
  auto f = FileFetcher::parse(in, "labels");
  std::vector<const Fetcher*> fetchers{&f};
  EXPECT_EQ(merge_document_package(corpus.document("a"), fetchers).merged_label, Label::False);
  EXPECT_EQ(merge_document_package(corpus.document("b"), fetchers).merged_label, Label::True);
}
