#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "veracity/common.hpp"
#include "veracity/corpus.hpp"

namespace veracity {

// ---------------------------------------------------------------------------
// String similarity

inline double jaro_similarity(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const std::size_t window = std::max(a.size(), b.size()) / 2 > 0 ? std::max(a.size(), b.size()) / 2 - 1 : 0;
  std::vector<bool> ma(a.size(), false), mb(b.size(), false);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t lo = i > window ? i - window : 0;
    std::size_t hi = std::min(b.size(), i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (!mb[j] && a[i] == b[j]) {
        ma[i] = mb[j] = true;
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;
  std::size_t half_transpositions = 0;
  for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
    if (!ma[i]) continue;
    while (!mb[j]) ++j;
    if (a[i] != b[j]) ++half_transpositions;
    ++j;
  }
  const double m = static_cast<double>(matches);
  const double t = static_cast<double>(half_transpositions) / 2.0;
  return (m / static_cast<double>(a.size()) + m / static_cast<double>(b.size()) + (m - t) / m) / 3.0;
}

/// Jaro similarity boosted by the common prefix (at most 4 characters).
inline double jaro_winkler_similarity(std::string_view a, std::string_view b, double prefix_weight = 0.1) {
  if (prefix_weight < 0.0 || prefix_weight > 0.25) throw UsageError("prefix_weight must lie in [0, 0.25]");
  double j = jaro_similarity(a, b);
  std::size_t prefix = 0;
  while (prefix < 4 && prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
  return j + static_cast<double>(prefix) * prefix_weight * (1.0 - j);
}

/// Lowercase with every non-alphanumeric character removed.
inline std::string normalize_handle(std::string_view handle) {
  std::string out;
  for (char c : handle) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) out += static_cast<char>(std::tolower(u));
  }
  return out;
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// ---------------------------------------------------------------------------
// Entity linking

struct LinkThresholds {
  double name_similarity = 0.9;
  std::size_t min_shared_rare_urls = 2;
  /// A URL is rare when ln(N_actors / actors_using) exceeds this.
  double rare_idf = std::log(2.0);
};

struct IdentityCluster {
  std::string cluster_id;
  std::vector<ActorKey> members;  // sorted
  std::vector<std::string> evidence;

  bool operator==(const IdentityCluster&) const = default;
};

using ActorUrls = std::map<ActorKey, std::set<std::string>>;

/// URLs each actor posted, from the corpus items.
inline ActorUrls actor_urls(const Corpus& corpus) {
  ActorUrls out;
  for (const auto& it : corpus.items()) {
    for (const auto& u : it.urls) out[it.actor()].insert(u);
  }
  return out;
}

/// Links actors on different platforms when their normalized handles are
/// equal, or when their display names reach the Jaro-Winkler threshold and
/// they share enough rare URLs. Clusters are connected components, returned
/// in canonical order so the result does not depend on input order.
inline std::vector<IdentityCluster> link_entities(std::span<const Actor> actors, const ActorUrls& urls,
                                                  const LinkThresholds& th = {}) {
  std::vector<const Actor*> sorted;
  for (const auto& a : actors) sorted.push_back(&a);
  std::sort(sorted.begin(), sorted.end(), [](const Actor* x, const Actor* y) { return x->key() < y->key(); });
  sorted.erase(std::unique(sorted.begin(), sorted.end(),
                           [](const Actor* x, const Actor* y) { return x->key() == y->key(); }),
               sorted.end());
  const std::size_t n = sorted.size();

  std::map<std::string, std::size_t> url_users;
  std::vector<const std::set<std::string>*> url_sets(n, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = urls.find(sorted[i]->key());
    if (it == urls.end()) continue;
    url_sets[i] = &it->second;
    for (const auto& u : it->second) ++url_users[u];
  }
  auto is_rare = [&](const std::string& u) {
    return std::log(static_cast<double>(n) / static_cast<double>(url_users.at(u))) > th.rare_idf;
  };

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::pair<std::size_t, std::string>> evidence;
  auto link = [&](std::size_t i, std::size_t j, const std::string& why) {
    auto a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
    evidence.emplace_back(i, why + " " + sorted[i]->key().str() + " ~ " + sorted[j]->key().str());
  };

  std::vector<std::string> handles(n), names(n);
  for (std::size_t i = 0; i < n; ++i) {
    handles[i] = normalize_handle(sorted[i]->handle);
    names[i] = lowercase(sorted[i]->display_name);
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sorted[i]->platform == sorted[j]->platform) continue;
      if (!handles[i].empty() && handles[i] == handles[j]) {
        link(i, j, "handle");
        continue;
      }
      if (names[i].empty() || names[j].empty() || url_sets[i] == nullptr || url_sets[j] == nullptr) continue;
      if (jaro_winkler_similarity(names[i], names[j]) < th.name_similarity) continue;
      std::size_t shared = 0;
      for (const auto& u : *url_sets[i]) {
        if (url_sets[j]->contains(u) && is_rare(u)) ++shared;
      }
      if (shared >= th.min_shared_rare_urls) link(i, j, "name+urls");
    }
  }

  std::map<std::size_t, IdentityCluster> by_root;
  for (std::size_t i = 0; i < n; ++i) by_root[find(i)].members.push_back(sorted[i]->key());
  for (const auto& [i, why] : evidence) by_root[find(i)].evidence.push_back(why);

  std::vector<IdentityCluster> out;
  for (auto& [root, c] : by_root) {
    std::sort(c.evidence.begin(), c.evidence.end());
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const IdentityCluster& a, const IdentityCluster& b) { return a.members.front() < b.members.front(); });
  for (std::size_t k = 0; k < out.size(); ++k) out[k].cluster_id = "e" + std::to_string(k);
  return out;
}

inline nlohmann::json identity_clusters_to_json(std::span<const IdentityCluster> clusters) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : clusters) {
    std::vector<std::string> members;
    for (const auto& m : c.members) members.push_back(m.str());
    arr.push_back({{"cluster_id", c.cluster_id}, {"members", members}, {"evidence", c.evidence}});
  }
  return {{"format", "veracity-identities"}, {"version", 1}, {"clusters", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// Fetchers and document packages

struct LabelSource {
  std::string source;
  Label label = Label::Unknown;

  bool operator==(const LabelSource&) const = default;
};

/// Source of fact-check labels and platform context for a document. Live
/// API clients would implement this; the bundled implementations read files
/// or an in-memory corpus.
class Fetcher {
 public:
  virtual ~Fetcher() = default;
  virtual std::string name() const = 0;
  virtual std::vector<std::string> platforms() const = 0;
  virtual std::vector<LabelSource> fetch_label(const DocumentRecord& doc) const = 0;
  virtual std::vector<EngagementItem> fetch_context(const DocumentRecord& doc, const std::string& platform) const = 0;
};

/// Serves engagements of a corpus; contributes no labels.
class CorpusFetcher : public Fetcher {
 public:
  explicit CorpusFetcher(const Corpus& corpus) : corpus_(&corpus) {
    std::set<std::string> p;
    for (const auto& it : corpus.items()) p.insert(it.platform);
    platforms_.assign(p.begin(), p.end());
  }

  std::string name() const override { return "corpus"; }
  std::vector<std::string> platforms() const override { return platforms_; }
  std::vector<LabelSource> fetch_label(const DocumentRecord&) const override { return {}; }
  std::vector<EngagementItem> fetch_context(const DocumentRecord& doc, const std::string& platform) const override {
    std::vector<EngagementItem> out;
    for (std::size_t i : corpus_->items_for(doc.doc_id)) {
      if (corpus_->items()[i].platform == platform) out.push_back(corpus_->items()[i]);
    }
    return out;
  }

 private:
  const Corpus* corpus_;
  std::vector<std::string> platforms_;
};

/// File-backed mock. Fixture lines are JSON objects keyed by doc_id with
/// kind "label" ({doc_id, source, label}) or "item" (corpus item schema).
class FileFetcher : public Fetcher {
 public:
  static FileFetcher parse(std::istream& in, std::string name) {
    FileFetcher f;
    f.name_ = std::move(name);
    std::set<std::string> platforms;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto j = nlohmann::json::parse(line);
        auto doc = j.at("doc_id").get<std::string>();
        auto kind = j.at("kind").get<std::string>();
        if (kind == "label") {
          f.labels_[doc].push_back({j.at("source").get<std::string>(), label_from_string(j.at("label").get<std::string>())});
        } else if (kind == "item") {
          EngagementItem it;
          it.item_id = j.at("item_id").get<std::string>();
          it.doc_id = doc;
          it.actor_id = j.at("actor_id").get<std::string>();
          it.platform = j.at("platform").get<std::string>();
          it.timestamp = j.at("timestamp").get<Timestamp>();
          it.kind = engagement_kind_from_string(j.value("engagement", "post"));
          if (j.contains("text") && !j.at("text").is_null()) it.text = j.at("text").get<std::string>();
          it.urls = detail::string_list(j, "urls");
          it.hashtags = detail::string_list(j, "hashtags");
          it.mentions = detail::string_list(j, "mentions");
          platforms.insert(it.platform);
          f.items_[doc].push_back(std::move(it));
        } else {
          throw DataError("unknown fixture kind '" + kind + "'");
        }
      } catch (const nlohmann::json::exception& e) {
        throw DataError("fixture line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    f.platforms_.assign(platforms.begin(), platforms.end());
    return f;
  }

  static FileFetcher load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fixture '" + path + "'");
    return parse(in, path);
  }

  std::string name() const override { return name_; }
  std::vector<std::string> platforms() const override { return platforms_; }

  std::vector<LabelSource> fetch_label(const DocumentRecord& doc) const override {
    auto it = labels_.find(doc.doc_id);
    return it == labels_.end() ? std::vector<LabelSource>{} : it->second;
  }

  std::vector<EngagementItem> fetch_context(const DocumentRecord& doc, const std::string& platform) const override {
    std::vector<EngagementItem> out;
    auto it = items_.find(doc.doc_id);
    if (it == items_.end()) return out;
    for (const auto& item : it->second) {
      if (item.platform == platform) out.push_back(item);
    }
    return out;
  }

 private:
  std::string name_;
  std::vector<std::string> platforms_;
  std::map<std::string, std::vector<LabelSource>> labels_;
  std::map<std::string, std::vector<EngagementItem>> items_;
};

/// Writes label fixture lines: each document gets one label per source,
/// correct with probability `accuracy`.
inline std::string make_label_fixtures(const Corpus& corpus, std::span<const std::string> sources, double accuracy,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::ostringstream os;
  for (const auto& d : corpus.documents()) {
    for (const auto& s : sources) {
      Label l = d.label;
      if (l != Label::Unknown && unit(rng) >= accuracy) l = l == Label::True ? Label::False : Label::True;
      os << nlohmann::json{{"kind", "label"}, {"doc_id", d.doc_id}, {"source", s}, {"label", to_string(l)}}.dump()
         << '\n';
    }
  }
  return os.str();
}

struct DocumentPackage {
  DocumentRecord document;
  std::map<std::string, std::vector<EngagementItem>> per_platform_engagements;
  Label merged_label = Label::Unknown;
  std::vector<LabelSource> label_sources;
  std::vector<std::string> warnings;

  std::size_t engagement_count() const {
    std::size_t n = 0;
    for (const auto& [p, items] : per_platform_engagements) n += items.size();
    return n;
  }
};

/// Majority label over the sources; ties and no sources give unknown.
inline Label majority_label(std::span<const LabelSource> sources) {
  std::map<Label, std::size_t> count;
  for (const auto& s : sources) ++count[s.label];
  Label best = Label::Unknown;
  std::size_t best_n = 0;
  bool tie = false;
  for (const auto& [l, n] : count) {
    if (n > best_n) {
      best = l;
      best_n = n;
      tie = false;
    } else if (n == best_n) {
      tie = true;
    }
  }
  return (best_n == 0 || tie) ? Label::Unknown : best;
}

/// Collects labels and per-platform context from every fetcher. A failing
/// fetcher becomes a warning on the package.
inline DocumentPackage merge_document_package(const DocumentRecord& doc, std::span<const Fetcher* const> fetchers) {
  DocumentPackage pkg;
  pkg.document = doc;
  for (const auto* f : fetchers) {
    try {
      auto labels = f->fetch_label(doc);
      pkg.label_sources.insert(pkg.label_sources.end(), labels.begin(), labels.end());
    } catch (const std::exception& e) {
      pkg.warnings.push_back(f->name() + ": label fetch failed: " + e.what());
    }
    for (const auto& platform : f->platforms()) {
      try {
        for (auto& item : f->fetch_context(doc, platform)) {
          pkg.per_platform_engagements[item.platform].push_back(std::move(item));
        }
      } catch (const std::exception& e) {
        pkg.warnings.push_back(f->name() + ": context fetch for '" + platform + "' failed: " + e.what());
      }
    }
  }
  pkg.merged_label = majority_label(pkg.label_sources);
  return pkg;
}

inline nlohmann::json package_to_json(const DocumentPackage& pkg) {
  nlohmann::json eng = nlohmann::json::object();
  for (const auto& [p, items] : pkg.per_platform_engagements) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& it : items) {
      auto j = detail::to_json(it);
      j.erase("kind");
      arr.push_back(std::move(j));
    }
    eng[p] = std::move(arr);
  }
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : pkg.label_sources) sources.push_back({{"source", s.source}, {"label", to_string(s.label)}});
  auto doc = detail::to_json(pkg.document);
  doc.erase("kind");
  return {{"format", "veracity-package"},
          {"version", 1},
          {"document", std::move(doc)},
          {"engagements", std::move(eng)},
          {"engagement_count", pkg.engagement_count()},
          {"merged_label", to_string(pkg.merged_label)},
          {"label_sources", std::move(sources)},
          {"warnings", pkg.warnings}};
}

}  // namespace veracity
