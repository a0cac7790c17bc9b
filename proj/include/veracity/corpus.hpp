#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "veracity/common.hpp"

namespace veracity {

struct DocumentRecord {
  std::string doc_id;
  std::string platform;
  std::string publisher_id;
  std::string title;
  std::string body;
  Timestamp publish_time = 0;
  Label label = Label::Unknown;

  bool operator==(const DocumentRecord&) const = default;
};

enum class EngagementKind { Post, Share, Reply, Like };

inline std::string_view to_string(EngagementKind k) {
  switch (k) {
    case EngagementKind::Post: return "post";
    case EngagementKind::Share: return "share";
    case EngagementKind::Reply: return "reply";
    case EngagementKind::Like: return "like";
  }
  return "post";
}

inline EngagementKind engagement_kind_from_string(std::string_view s) {
  if (s == "post") return EngagementKind::Post;
  if (s == "share") return EngagementKind::Share;
  if (s == "reply") return EngagementKind::Reply;
  if (s == "like") return EngagementKind::Like;
  throw DataError("invalid engagement kind '" + std::string(s) + "'");
}

struct EngagementItem {
  std::string item_id;
  std::string doc_id;
  std::string actor_id;
  std::string platform;
  Timestamp timestamp = 0;
  EngagementKind kind = EngagementKind::Post;
  std::optional<std::string> text;
  std::vector<std::string> urls;
  std::vector<std::string> hashtags;
  std::vector<std::string> mentions;

  ActorKey actor() const { return {platform, actor_id}; }
  bool operator==(const EngagementItem&) const = default;
};

/// One entry of an actor's labelled history. The label is frozen at
/// observed_at so later fact-checks cannot leak backwards in time.
struct HistoryEntry {
  std::string doc_id;
  Label label = Label::Unknown;
  Timestamp observed_at = 0;

  bool operator==(const HistoryEntry&) const = default;
};

struct Actor {
  std::string actor_id;
  std::string platform;
  std::string handle;
  std::string display_name;
  Timestamp created_at = 0;
  std::vector<HistoryEntry> engagement_history;

  ActorKey key() const { return {platform, actor_id}; }
  bool operator==(const Actor&) const = default;
};

struct PublisherEntry {
  std::string doc_id;
  Label label = Label::Unknown;

  bool operator==(const PublisherEntry&) const = default;
};

struct Publisher {
  std::string publisher_id;
  std::vector<PublisherEntry> history;

  bool operator==(const Publisher&) const = default;
};

/// A document observed at time t: every engagement with timestamp <= t, in
/// timestamp order.
struct Snapshot {
  std::string doc_id;
  Timestamp t = 0;
  std::vector<EngagementItem> engagements;

  std::size_t engagement_count() const { return engagements.size(); }
};

/// Immutable, cross-referenced collection of documents, engagements, actors
/// and publishers. Construct through Corpus::build or load_corpus.
class Corpus {
 public:
  Corpus() = default;

  /// Validates ids and references and builds lookup indexes.
  /// Throws DataError on duplicates, dangling references or broken invariants.
  static Corpus build(std::vector<DocumentRecord> documents, std::vector<EngagementItem> items,
                      std::vector<Actor> actors, std::vector<Publisher> publishers);

  const std::vector<DocumentRecord>& documents() const { return documents_; }
  const std::vector<EngagementItem>& items() const { return items_; }
  const std::vector<Actor>& actors() const { return actors_; }
  const std::vector<Publisher>& publishers() const { return publishers_; }

  const DocumentRecord* find_document(std::string_view doc_id) const {
    auto it = doc_index_.find(doc_id);
    return it == doc_index_.end() ? nullptr : &documents_[it->second];
  }

  const DocumentRecord& document(std::string_view doc_id) const {
    const auto* d = find_document(doc_id);
    if (d == nullptr) throw DataError("unknown document '" + std::string(doc_id) + "'");
    return *d;
  }

  const Actor* find_actor(const ActorKey& key) const {
    auto it = actor_index_.find(key);
    return it == actor_index_.end() ? nullptr : &actors_[it->second];
  }

  const Publisher* find_publisher(std::string_view publisher_id) const {
    auto it = publisher_index_.find(publisher_id);
    return it == publisher_index_.end() ? nullptr : &publishers_[it->second];
  }

  /// Indexes into items(), sorted by (timestamp, item_id).
  std::span<const std::size_t> items_for(std::string_view doc_id) const {
    auto it = doc_items_.find(doc_id);
    if (it == doc_items_.end()) return {};
    return it->second;
  }

  Snapshot snapshot_at(std::string_view doc_id, Timestamp t) const;

  /// Earliest and latest timestamp over documents and items.
  Timestamp min_time() const { return min_time_; }
  Timestamp max_time() const { return max_time_; }

  bool operator==(const Corpus& o) const {
    return documents_ == o.documents_ && items_ == o.items_ && actors_ == o.actors_ &&
           publishers_ == o.publishers_;
  }

 private:
  std::vector<DocumentRecord> documents_;
  std::vector<EngagementItem> items_;
  std::vector<Actor> actors_;
  std::vector<Publisher> publishers_;

  std::map<std::string, std::size_t, std::less<>> doc_index_;
  std::map<ActorKey, std::size_t> actor_index_;
  std::map<std::string, std::size_t, std::less<>> publisher_index_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> doc_items_;
  Timestamp min_time_ = 0;
  Timestamp max_time_ = 0;
};

inline Corpus Corpus::build(std::vector<DocumentRecord> documents, std::vector<EngagementItem> items,
                            std::vector<Actor> actors, std::vector<Publisher> publishers) {
  Corpus c;
  c.documents_ = std::move(documents);
  c.items_ = std::move(items);
  c.actors_ = std::move(actors);
  c.publishers_ = std::move(publishers);

  bool first_time = true;
  auto see_time = [&](Timestamp t) {
    if (first_time) {
      c.min_time_ = c.max_time_ = t;
      first_time = false;
    } else {
      c.min_time_ = std::min(c.min_time_, t);
      c.max_time_ = std::max(c.max_time_, t);
    }
  };

  for (std::size_t i = 0; i < c.documents_.size(); ++i) {
    const auto& d = c.documents_[i];
    if (d.doc_id.empty()) throw DataError("document with empty doc_id");
    if (!c.doc_index_.emplace(d.doc_id, i).second) {
      throw DataError("duplicate doc_id '" + d.doc_id + "'");
    }
    if (d.publish_time < 0) throw DataError("document '" + d.doc_id + "' has negative publish_time");
    if (d.body.empty() && d.title.empty()) {
      throw DataError("document '" + d.doc_id + "' has neither title nor body");
    }
    see_time(d.publish_time);
  }

  for (std::size_t i = 0; i < c.publishers_.size(); ++i) {
    const auto& p = c.publishers_[i];
    if (!c.publisher_index_.emplace(p.publisher_id, i).second) {
      throw DataError("duplicate publisher_id '" + p.publisher_id + "'");
    }
    for (const auto& e : p.history) {
      if (!c.doc_index_.contains(e.doc_id)) {
        throw DataError("dangling reference: publisher '" + p.publisher_id + "' history cites unknown document '" +
                        e.doc_id + "'");
      }
    }
  }

  for (std::size_t i = 0; i < c.actors_.size(); ++i) {
    const auto& a = c.actors_[i];
    if (!c.actor_index_.emplace(a.key(), i).second) {
      throw DataError("duplicate actor '" + a.key().str() + "'");
    }
    for (const auto& e : a.engagement_history) {
      if (!c.doc_index_.contains(e.doc_id)) {
        throw DataError("dangling reference: actor '" + a.key().str() + "' history cites unknown document '" +
                        e.doc_id + "'");
      }
    }
  }

  std::map<std::string, std::size_t, std::less<>> item_ids;
  for (std::size_t i = 0; i < c.items_.size(); ++i) {
    const auto& it = c.items_[i];
    if (!item_ids.emplace(it.item_id, i).second) throw DataError("duplicate item_id '" + it.item_id + "'");
    auto d = c.doc_index_.find(it.doc_id);
    if (d == c.doc_index_.end()) {
      throw DataError("dangling reference: item '" + it.item_id + "' cites unknown document '" + it.doc_id + "'");
    }
    if (!c.actor_index_.contains(it.actor())) {
      throw DataError("dangling reference: item '" + it.item_id + "' cites unknown actor '" + it.actor().str() + "'");
    }
    if (it.timestamp < c.documents_[d->second].publish_time) {
      throw DataError("item '" + it.item_id + "' precedes the publish_time of '" + it.doc_id + "'");
    }
    c.doc_items_[it.doc_id].push_back(i);
    see_time(it.timestamp);
  }
  for (auto& [doc, idx] : c.doc_items_) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& x = c.items_[a];
      const auto& y = c.items_[b];
      return std::tie(x.timestamp, x.item_id) < std::tie(y.timestamp, y.item_id);
    });
  }
  return c;
}

inline Snapshot Corpus::snapshot_at(std::string_view doc_id, Timestamp t) const {
  const auto& doc = document(doc_id);
  if (t < doc.publish_time) {
    throw DataError("snapshot time precedes publish_time of '" + doc.doc_id + "'");
  }
  Snapshot s{doc.doc_id, t, {}};
  for (std::size_t i : items_for(doc_id)) {
    if (items_[i].timestamp > t) break;
    s.engagements.push_back(items_[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSONL serialization

namespace detail {

inline nlohmann::json to_json(const DocumentRecord& d) {
  return {{"kind", "document"}, {"doc_id", d.doc_id},       {"platform", d.platform},
          {"publisher_id", d.publisher_id}, {"title", d.title}, {"body", d.body},
          {"publish_time", d.publish_time}, {"label", to_string(d.label)}};
}

inline nlohmann::json to_json(const EngagementItem& it) {
  nlohmann::json j = {{"kind", "item"},         {"item_id", it.item_id},     {"doc_id", it.doc_id},
                      {"actor_id", it.actor_id}, {"platform", it.platform}, {"timestamp", it.timestamp},
                      {"engagement", to_string(it.kind)}, {"urls", it.urls}, {"hashtags", it.hashtags},
                      {"mentions", it.mentions}};
  if (it.text) j["text"] = *it.text;
  return j;
}

inline nlohmann::json to_json(const Actor& a) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : a.engagement_history) {
    hist.push_back({{"doc_id", e.doc_id}, {"label", to_string(e.label)}, {"observed_at", e.observed_at}});
  }
  return {{"kind", "actor"},           {"actor_id", a.actor_id},
          {"platform", a.platform},    {"handle", a.handle},
          {"display_name", a.display_name}, {"created_at", a.created_at},
          {"history", std::move(hist)}};
}

inline nlohmann::json to_json(const Publisher& p) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : p.history) hist.push_back({{"doc_id", e.doc_id}, {"label", to_string(e.label)}});
  return {{"kind", "publisher"}, {"publisher_id", p.publisher_id}, {"history", std::move(hist)}};
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace detail

/// Serializes a corpus as JSONL: documents, publishers, actors, then items.
inline void write_corpus(std::ostream& out, const Corpus& c) {
  for (const auto& d : c.documents()) out << detail::to_json(d).dump() << '\n';
  for (const auto& p : c.publishers()) out << detail::to_json(p).dump() << '\n';
  for (const auto& a : c.actors()) out << detail::to_json(a).dump() << '\n';
  for (const auto& it : c.items()) out << detail::to_json(it).dump() << '\n';
}

inline std::string serialize_corpus(const Corpus& c) {
  std::ostringstream os;
  write_corpus(os, c);
  return os.str();
}

/// Parses JSONL corpus text. Malformed lines are reported by 1-based line number.
inline Corpus parse_corpus(std::istream& in) {
  std::vector<DocumentRecord> docs;
  std::vector<EngagementItem> items;
  std::vector<Actor> actors;
  std::vector<Publisher> publishers;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "document") {
        DocumentRecord d;
        d.doc_id = j.at("doc_id").get<std::string>();
        d.platform = j.value("platform", "");
        d.publisher_id = j.value("publisher_id", "");
        d.title = j.value("title", "");
        d.body = j.value("body", "");
        d.publish_time = j.at("publish_time").get<Timestamp>();
        d.label = label_from_string(j.value("label", "unknown"));
        docs.push_back(std::move(d));
      } else if (kind == "item") {
        EngagementItem it;
        it.item_id = j.at("item_id").get<std::string>();
        it.doc_id = j.at("doc_id").get<std::string>();
        it.actor_id = j.at("actor_id").get<std::string>();
        it.platform = j.value("platform", "");
        it.timestamp = j.at("timestamp").get<Timestamp>();
        it.kind = engagement_kind_from_string(j.value("engagement", "post"));
        if (j.contains("text") && !j.at("text").is_null()) it.text = j.at("text").get<std::string>();
        it.urls = detail::string_list(j, "urls");
        it.hashtags = detail::string_list(j, "hashtags");
        it.mentions = detail::string_list(j, "mentions");
        items.push_back(std::move(it));
      } else if (kind == "actor") {
        Actor a;
        a.actor_id = j.at("actor_id").get<std::string>();
        a.platform = j.value("platform", "");
        a.handle = j.value("handle", "");
        a.display_name = j.value("display_name", "");
        a.created_at = j.value("created_at", Timestamp{0});
        if (j.contains("history")) {
          for (const auto& e : j.at("history")) {
            a.engagement_history.push_back({e.at("doc_id").get<std::string>(),
                                            label_from_string(e.value("label", "unknown")),
                                            e.value("observed_at", Timestamp{0})});
          }
        }
        actors.push_back(std::move(a));
      } else if (kind == "publisher") {
        Publisher p;
        p.publisher_id = j.at("publisher_id").get<std::string>();
        if (j.contains("history")) {
          for (const auto& e : j.at("history")) {
            p.history.push_back({e.at("doc_id").get<std::string>(), label_from_string(e.value("label", "unknown"))});
          }
        }
        publishers.push_back(std::move(p));
      } else {
        throw DataError("unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Corpus::build(std::move(docs), std::move(items), std::move(actors), std::move(publishers));
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return parse_corpus(in);
}

inline void save_corpus(const std::string& path, const Corpus& c) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file '" + path + "'");
  write_corpus(out, c);
}

}  // namespace veracity
