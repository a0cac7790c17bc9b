#pragma once

#include <string>
#include <vector>

#include "veracity/corpus.hpp"

namespace veracity::testing {

inline DocumentRecord make_doc(std::string id, std::string body, Timestamp publish = 0, Label label = Label::True,
                               std::string publisher = "pub1") {
  DocumentRecord d;
  d.doc_id = std::move(id);
  d.platform = "web";
  d.publisher_id = std::move(publisher);
  d.title = "";
  d.body = std::move(body);
  d.publish_time = publish;
  d.label = label;
  return d;
}

inline EngagementItem make_item(std::string id, std::string doc, std::string actor, Timestamp ts,
                                std::string platform = "x") {
  EngagementItem it;
  it.item_id = std::move(id);
  it.doc_id = std::move(doc);
  it.actor_id = std::move(actor);
  it.platform = std::move(platform);
  it.timestamp = ts;
  return it;
}

inline Actor make_actor(std::string id, std::string platform = "x", std::vector<HistoryEntry> history = {}) {
  Actor a;
  a.actor_id = std::move(id);
  a.platform = std::move(platform);
  a.handle = a.actor_id;
  a.display_name = a.actor_id;
  a.engagement_history = std::move(history);
  return a;
}

/// Labelled history of `n` entries all pointing at `doc`.
inline std::vector<HistoryEntry> history_of(const std::string& doc, std::size_t n, Label label) {
  return std::vector<HistoryEntry>(n, HistoryEntry{doc, label, 0});
}

}  // namespace veracity::testing
