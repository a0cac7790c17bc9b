#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "veracity/common.hpp"
#include "veracity/corpus.hpp"
#include "veracity/features.hpp"

namespace veracity {

// ---------------------------------------------------------------------------
// Near-duplicate text via 3-token shingles

using ShingleSet = std::vector<std::uint64_t>;  // sorted, unique

/// Hashes of every 3-token window; texts shorter than 3 tokens form one shingle.
inline ShingleSet shingles(std::string_view text, std::size_t width = 3) {
  auto tokens = tokenize(text);
  ShingleSet out;
  if (tokens.empty()) return out;
  if (tokens.size() < width) width = tokens.size();
  for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t k = 0; k < width; ++k) {
      h = fnv1a(tokens[i + k], h);
      h = fnv1a(" ", h);
    }
    out.push_back(h);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline double jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

/// Greedy near-duplicate grouping: each text joins the first earlier
/// representative with Jaccard >= threshold, else becomes a representative.
/// Candidates come from an inverted shingle index.
class NearDuplicateIndex {
 public:
  explicit NearDuplicateIndex(double threshold = 0.8) : threshold_(threshold) {}

  /// Returns the representative id for this text.
  std::size_t assign(const ShingleSet& s) {
    std::map<std::size_t, std::size_t> overlap;
    for (auto h : s) {
      auto it = postings_.find(h);
      if (it == postings_.end()) continue;
      for (auto rep : it->second) ++overlap[rep];
    }
    for (const auto& [rep, shared] : overlap) {
      const auto& r = reps_[rep];
      double jac = static_cast<double>(shared) / static_cast<double>(r.size() + s.size() - shared);
      if (jac >= threshold_) return rep;
    }
    std::size_t id = reps_.size();
    reps_.push_back(s);
    for (auto h : s) postings_[h].push_back(id);
    return id;
  }

  const ShingleSet& representative(std::size_t id) const { return reps_[id]; }

 private:
  double threshold_;
  std::vector<ShingleSet> reps_;
  std::map<std::uint64_t, std::vector<std::size_t>> postings_;
};

// ---------------------------------------------------------------------------
// Traces

enum class CharacteristicKind { Url, Hashtag, Mention, TextShingle };

inline std::string_view to_string(CharacteristicKind k) {
  switch (k) {
    case CharacteristicKind::Url: return "url";
    case CharacteristicKind::Hashtag: return "hashtag";
    case CharacteristicKind::Mention: return "mention";
    case CharacteristicKind::TextShingle: return "text_shingle_hash";
  }
  return "url";
}

struct TraceEvent {
  CharacteristicKind kind = CharacteristicKind::Url;
  std::string value;
  Timestamp timestamp = 0;

  auto operator<=>(const TraceEvent&) const = default;
};

struct ActorTrace {
  ActorKey actor;
  std::vector<TraceEvent> events;  // sorted by timestamp
};

struct TraceOptions {
  double shingle_threshold = 0.8;
};

/// One trace per corpus actor (key order). Each url, hashtag and mention is
/// an event; item text contributes one text_shingle_hash event whose value
/// identifies its near-duplicate group.
inline std::vector<ActorTrace> extract_traces(const Corpus& corpus, const TraceOptions& opt = {}) {
  std::map<ActorKey, std::vector<TraceEvent>> events;
  for (const auto& a : corpus.actors()) events[a.key()];

  std::vector<std::size_t> order(corpus.items().size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = corpus.items()[a];
    const auto& y = corpus.items()[b];
    return std::tie(x.timestamp, x.item_id) < std::tie(y.timestamp, y.item_id);
  });

  NearDuplicateIndex dedup(opt.shingle_threshold);
  for (std::size_t i : order) {
    const auto& it = corpus.items()[i];
    auto& ev = events[it.actor()];
    for (const auto& u : it.urls) ev.push_back({CharacteristicKind::Url, u, it.timestamp});
    for (const auto& h : it.hashtags) ev.push_back({CharacteristicKind::Hashtag, h, it.timestamp});
    for (const auto& m : it.mentions) ev.push_back({CharacteristicKind::Mention, m, it.timestamp});
    if (it.text) {
      auto s = shingles(*it.text);
      if (!s.empty()) {
        std::size_t rep = dedup.assign(s);
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (auto x : dedup.representative(rep)) h = fnv1a(hex64(x), h);
        ev.push_back({CharacteristicKind::TextShingle, hex64(h), it.timestamp});
      }
    }
  }

  std::vector<ActorTrace> out;
  for (auto& [key, ev] : events) {
    std::stable_sort(ev.begin(), ev.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.timestamp < b.timestamp; });
    out.push_back({key, std::move(ev)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Similarity graph

struct SimilarityEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
};

struct SimilarityGraph {
  std::vector<ActorKey> nodes;
  std::vector<SimilarityEdge> edges;  // u < v, sorted

  double weight(std::size_t u, std::size_t v) const {
    if (u > v) std::swap(u, v);
    for (const auto& e : edges) {
      if (e.u == u && e.v == v) return e.weight;
    }
    return 0.0;
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(double min_weight = 0.0) const {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(nodes.size());
    for (const auto& e : edges) {
      if (e.weight < min_weight) continue;
      adj[e.u].emplace_back(e.v, e.weight);
      adj[e.v].emplace_back(e.u, e.weight);
    }
    return adj;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "source,target,weight\n";
    os.precision(17);
    for (const auto& e : edges) os << nodes[e.u].str() << ',' << nodes[e.v].str() << ',' << e.weight << '\n';
    return os.str();
  }
};

/// Edge weight(u, v) = sum over (kind, value) pairs both actors used within
/// `window` seconds of each other of idf(value)^2, idf = ln(N / actors_using).
inline SimilarityGraph build_similarity_graph(std::span<const ActorTrace> traces, Timestamp window) {
  if (window <= 0) throw UsageError("coordination window must be positive");
  SimilarityGraph g;
  for (const auto& t : traces) g.nodes.push_back(t.actor);
  const double n_actors = static_cast<double>(traces.size());

  std::map<std::pair<CharacteristicKind, std::string>, std::vector<std::pair<Timestamp, std::size_t>>> by_value;
  for (std::size_t a = 0; a < traces.size(); ++a) {
    for (const auto& e : traces[a].events) by_value[{e.kind, e.value}].emplace_back(e.timestamp, a);
  }

  std::map<std::pair<std::size_t, std::size_t>, double> weights;
  for (auto& [key, occ] : by_value) {
    std::set<std::size_t> users;
    for (const auto& o : occ) users.insert(o.second);
    if (users.size() < 2) continue;
    double idf = std::log(n_actors / static_cast<double>(users.size()));
    if (idf <= 0.0) continue;
    std::sort(occ.begin(), occ.end());
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < occ.size(); ++i) {
      for (std::size_t j = i + 1; j < occ.size() && occ[j].first - occ[i].first <= window; ++j) {
        auto u = occ[i].second, v = occ[j].second;
        if (u == v) continue;
        pairs.emplace(std::min(u, v), std::max(u, v));
      }
    }
    for (const auto& p : pairs) weights[p] += idf * idf;
  }
  for (const auto& [p, w] : weights) g.edges.push_back({p.first, p.second, w});
  return g;
}

// ---------------------------------------------------------------------------
// Community detection

/// Weighted asynchronous label propagation. Nodes are visited in a seeded
/// shuffled order each sweep; a node keeps its label when it is among the
/// heaviest, otherwise it takes the smallest heaviest label.
inline std::vector<std::size_t> label_propagation(const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
                                                  std::uint64_t seed, std::size_t max_sweeps = 100) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), std::size_t{0});
  std::vector<std::size_t> order(label);
  std::mt19937_64 rng(seed);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    std::shuffle(order.begin(), order.end(), rng);
    bool changed = false;
    for (std::size_t v : order) {
      if (adj[v].empty()) continue;
      std::map<std::size_t, double> score;
      for (const auto& [u, w] : adj[v]) score[label[u]] += w;
      double best = -1.0;
      for (const auto& [l, s] : score) best = std::max(best, s);
      auto own = score.find(label[v]);
      if (own != score.end() && own->second >= best) continue;
      for (const auto& [l, s] : score) {
        if (s >= best) {
          label[v] = l;
          changed = true;
          break;
        }
      }
    }
    if (!changed) break;
  }
  return label;
}

/// Groups node indices by label; groups sorted by smallest member.
inline std::vector<std::vector<std::size_t>> groups_of(std::span<const std::size_t> label) {
  std::map<std::size_t, std::vector<std::size_t>> g;
  for (std::size_t v = 0; v < label.size(); ++v) g[label[v]].push_back(v);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [l, members] : g) out.push_back(std::move(members));
  std::sort(out.begin(), out.end());
  return out;
}

/// Linear-interpolation percentile (q in [0,100]) of an unsorted sample.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Community {
  std::vector<ActorKey> actors;
  std::vector<std::size_t> nodes;
  double extent = 0.0;
  double sync_z = 0.0;
  Intent intent = Intent::Unknown;
};

struct CommunityOptions {
  std::vector<double> percentiles{10, 25, 50, 75, 90};
  double persistence = 0.9;
  std::uint64_t seed = 17;
};

/// Label propagation at each edge-weight percentile threshold. Communities
/// are those found at the lowest percentile (singletons dropped); extent is
/// the highest percentile at which some community still holds >= persistence
/// of the members, divided by the largest requested percentile.
inline std::vector<Community> detect_communities(const SimilarityGraph& graph, const CommunityOptions& opt = {}) {
  if (opt.percentiles.empty()) throw UsageError("need at least one percentile");
  for (std::size_t i = 0; i < opt.percentiles.size(); ++i) {
    double q = opt.percentiles[i];
    if (!(q >= 0.0 && q <= 100.0)) throw UsageError("percentiles must lie in [0,100]");
    if (i > 0 && q <= opt.percentiles[i - 1]) throw UsageError("percentiles must ascend");
  }
  if (graph.nodes.empty() || graph.edges.empty()) return {};

  std::vector<double> w;
  for (const auto& e : graph.edges) w.push_back(e.weight);

  std::vector<std::vector<std::size_t>> labels;
  for (double q : opt.percentiles) {
    labels.push_back(label_propagation(graph.adjacency(percentile(w, q)), opt.seed));
  }

  const double q_max = opt.percentiles.back();
  std::vector<Community> out;
  for (auto& members : groups_of(labels.front())) {
    if (members.size() < 2) continue;
    Community c;
    c.nodes = members;
    for (auto v : members) c.actors.push_back(graph.nodes[v]);
    double highest = opt.percentiles.front();
    for (std::size_t k = 0; k < opt.percentiles.size(); ++k) {
      std::map<std::size_t, std::size_t> count;
      for (auto v : members) ++count[labels[k][v]];
      std::size_t largest = 0;
      for (const auto& [l, n] : count) largest = std::max(largest, n);
      if (static_cast<double>(largest) >= opt.persistence * static_cast<double>(members.size())) {
        highest = opt.percentiles[k];
      }
    }
    c.extent = q_max > 0.0 ? highest / q_max : 1.0;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Community& a, const Community& b) { return a.nodes.size() > b.nodes.size(); });
  return out;
}

/// Adjusted Rand Index between two labelings of the same items.
inline double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw UsageError("ARI: labelings differ in length");
  auto choose2 = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<std::size_t, std::size_t>, double> table;
  std::map<std::size_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [k, n] : table) index += choose2(n);
  for (const auto& [k, n] : ra) sa += choose2(n);
  for (const auto& [k, n] : rb) sb += choose2(n);
  double expected = sa * sb / choose2(static_cast<double>(a.size()));
  double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// Temporal synchronization

/// Cross-actor event pairs at most `window` apart. Events are (time, actor).
inline std::size_t cross_actor_pairs(std::vector<std::pair<Timestamp, std::size_t>> events, Timestamp window) {
  std::sort(events.begin(), events.end());
  std::map<std::size_t, std::size_t> in_window;
  std::size_t lo = 0, total = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    while (events[i].first - events[lo].first > window) {
      --in_window[events[lo].second];
      ++lo;
    }
    total += (i - lo) - in_window[events[i].second];
    ++in_window[events[i].second];
  }
  return total;
}

/// Permutation z-score of the cross-actor co-occurrence count. Shuffles
/// redraw every event time uniformly over [range_begin, range_end].
inline double synchronization_score(std::span<const ActorKey> community, std::span<const ActorTrace> traces,
                                    Timestamp window, std::size_t n_shuffles, std::uint64_t seed,
                                    std::optional<std::pair<Timestamp, Timestamp>> range = std::nullopt) {
  if (community.size() < 2) throw UsageError("synchronization_score needs at least two actors");
  if (n_shuffles < 100) throw UsageError("synchronization_score needs at least 100 shuffles");
  if (!range) {
    bool any = false;
    Timestamp lo = 0, hi = 0;
    for (const auto& t : traces) {
      for (const auto& e : t.events) {
        lo = any ? std::min(lo, e.timestamp) : e.timestamp;
        hi = any ? std::max(hi, e.timestamp) : e.timestamp;
        any = true;
      }
    }
    range = {lo, hi};
  }

  std::set<ActorKey> members(community.begin(), community.end());
  std::vector<std::pair<Timestamp, std::size_t>> events;
  std::size_t idx = 0;
  for (const auto& t : traces) {
    if (!members.contains(t.actor)) continue;
    for (const auto& e : t.events) events.emplace_back(e.timestamp, idx);
    ++idx;
  }
  if (events.size() < 2) return 0.0;

  const double observed = static_cast<double>(cross_actor_pairs(events, window));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Timestamp> when(range->first, range->second);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t s = 0; s < n_shuffles; ++s) {
    for (auto& e : events) e.first = when(rng);
    double v = static_cast<double>(cross_actor_pairs(events, window));
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(n_shuffles);
  const double mean = sum / n;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  if (var <= 0.0) return 0.0;
  return (observed - mean) / std::sqrt(var);
}

}  // namespace veracity
