#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "veracity/common.hpp"
#include "veracity/corpus.hpp"
#include "veracity/default_lexicon.hpp"

namespace veracity {

// ---------------------------------------------------------------------------
// Tokenization

inline bool is_ascii_punct(unsigned char c) { return c < 128 && std::ispunct(c) != 0; }

/// Lowercase, split on whitespace, strip leading/trailing punctuation.
/// Tokens that are pure punctuation vanish.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_ascii_punct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_ascii_punct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(tok));
    }
    i = j;
  }
  return out;
}

/// Title and body are concatenated; titles carry no extra weight.
inline std::vector<std::string> document_tokens(const DocumentRecord& doc) {
  auto tokens = tokenize(doc.title);
  auto body = tokenize(doc.body);
  tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
  return tokens;
}

inline std::size_t word_count(const DocumentRecord& doc) { return document_tokens(doc).size(); }

// ---------------------------------------------------------------------------
// Segmentation

using Segment = std::vector<std::string>;

/// Splits into K' = min(K, n) contiguous segments whose sizes differ by at
/// most one; the first n mod K' segments get the extra token.
inline std::vector<Segment> segment_tokens(std::span<const std::string> tokens, std::size_t k) {
  if (k == 0) throw UsageError("segment count must be positive");
  if (tokens.empty()) throw DataError("cannot segment an empty token stream");
  const std::size_t n = tokens.size();
  const std::size_t kk = std::min(k, n);
  const std::size_t base = n / kk;
  const std::size_t extra = n % kk;
  std::vector<Segment> out;
  out.reserve(kk);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < kk; ++s) {
    std::size_t len = base + (s < extra ? 1 : 0);
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(pos),
                     tokens.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return out;
}

inline std::vector<Segment> segment_text(std::string_view body, std::size_t k) {
  auto tokens = tokenize(body);
  if (tokens.empty()) throw DataError("cannot segment empty text");
  return segment_tokens(tokens, k);
}

// ---------------------------------------------------------------------------
// Affect lexicon

class AffectLexicon {
 public:
  AffectLexicon() = default;

  /// Parses `category<TAB>word` lines. Categories are numbered in order of
  /// first appearance. Blank lines and `#` comments are skipped.
  static AffectLexicon parse(std::string_view text) {
    AffectLexicon lex;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty() || line.front() == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string_view::npos || tab == 0 || tab + 1 >= line.size()) {
        throw DataError("lexicon line " + std::to_string(line_no) + ": expected category<TAB>word");
      }
      std::string category(line.substr(0, tab));
      auto words = tokenize(line.substr(tab + 1));
      if (words.size() != 1) {
        throw DataError("lexicon line " + std::to_string(line_no) + ": expected a single word");
      }
      lex.add(category, words.front());
    }
    if (lex.categories_.empty()) throw DataError("lexicon has no categories");
    lex.hash_ = fnv1a(text);
    return lex;
  }

  static AffectLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  static const AffectLexicon& bundled() {
    static const AffectLexicon lex = parse(kDefaultLexiconText);
    return lex;
  }

  const std::vector<std::string>& categories() const { return categories_; }
  std::size_t category_count() const { return categories_.size(); }

  /// Category indices for a word; the lookup normalizes like tokenize().
  const std::set<std::size_t>& lookup(std::string_view word) const {
    static const std::set<std::size_t> none;
    auto it = entries_.find(word);
    if (it == entries_.end()) {
      auto toks = tokenize(word);
      if (toks.size() != 1) return none;
      it = entries_.find(toks.front());
      if (it == entries_.end()) return none;
    }
    return it->second;
  }

  /// Words belonging to a category, in lexicographic order.
  std::vector<std::string> words_in(std::size_t category) const {
    std::vector<std::string> out;
    for (const auto& [w, cats] : entries_) {
      if (cats.contains(category)) out.push_back(w);
    }
    return out;
  }

  /// FNV-1a of the source text, recorded with persisted models.
  std::uint64_t hash() const { return hash_; }

 private:
  void add(const std::string& category, const std::string& word) {
    auto it = std::find(categories_.begin(), categories_.end(), category);
    std::size_t idx = static_cast<std::size_t>(it - categories_.begin());
    if (it == categories_.end()) categories_.push_back(category);
    entries_[word].insert(idx);
  }

  std::vector<std::string> categories_;
  std::map<std::string, std::set<std::size_t>, std::less<>> entries_;
  std::uint64_t hash_ = 0;
};

/// Component c = share of segment tokens that belong to category c.
inline std::vector<double> affect_vector(std::span<const std::string> segment, const AffectLexicon& lex) {
  std::vector<double> v(lex.category_count(), 0.0);
  if (segment.empty()) throw DataError("affect_vector of an empty segment");
  for (const auto& tok : segment) {
    for (std::size_t c : lex.lookup(tok)) v[c] += 1.0;
  }
  const double n = static_cast<double>(segment.size());
  for (auto& x : v) x /= n;
  return v;
}

struct FlowVector {
  std::vector<double> values;
  std::size_t segments = 0;
  std::size_t categories = 0;

  static constexpr std::size_t dimension(std::size_t k, std::size_t c) { return k * c + (k > 0 ? k - 1 : 0) * c; }
};

/// K' affect vectors followed by the K'-1 consecutive deltas (next - current).
inline FlowVector flow_from_segments(std::span<const Segment> segments, const AffectLexicon& lex) {
  FlowVector fv;
  fv.segments = segments.size();
  fv.categories = lex.category_count();
  fv.values.reserve(FlowVector::dimension(fv.segments, fv.categories));
  std::vector<std::vector<double>> affect;
  affect.reserve(segments.size());
  for (const auto& s : segments) affect.push_back(affect_vector(s, lex));
  for (const auto& a : affect) fv.values.insert(fv.values.end(), a.begin(), a.end());
  for (std::size_t s = 1; s < affect.size(); ++s) {
    for (std::size_t c = 0; c < fv.categories; ++c) fv.values.push_back(affect[s][c] - affect[s - 1][c]);
  }
  return fv;
}

inline FlowVector flow_vector(const DocumentRecord& doc, const AffectLexicon& lex, std::size_t k) {
  auto tokens = document_tokens(doc);
  if (tokens.empty()) throw DataError("document '" + doc.doc_id + "' has no tokens");
  auto segs = segment_tokens(tokens, k);
  return flow_from_segments(segs, lex);
}

// ---------------------------------------------------------------------------
// Reliability factors

enum class FactorId { WordCount, EngagementCount, UserHistoryDepth, PublisherHistoryDepth };

inline constexpr FactorId kAllFactors[] = {FactorId::WordCount, FactorId::EngagementCount,
                                           FactorId::UserHistoryDepth, FactorId::PublisherHistoryDepth};

inline std::string_view to_string(FactorId f) {
  switch (f) {
    case FactorId::WordCount: return "word_count";
    case FactorId::EngagementCount: return "engagement_count";
    case FactorId::UserHistoryDepth: return "user_history_depth";
    case FactorId::PublisherHistoryDepth: return "publisher_history_depth";
  }
  return "word_count";
}

inline FactorId factor_from_string(std::string_view s) {
  for (auto f : kAllFactors) {
    if (to_string(f) == s) return f;
  }
  throw DataError("unknown factor '" + std::string(s) + "'");
}

struct FactorReading {
  FactorId factor = FactorId::WordCount;
  double value = 0.0;

  bool operator==(const FactorReading&) const = default;
};

/// Labelled history entries of an actor visible at time t.
inline std::size_t labeled_history_depth(const Actor& a, Timestamp t) {
  std::size_t n = 0;
  for (const auto& e : a.engagement_history) {
    if (e.label != Label::Unknown && e.observed_at <= t) ++n;
  }
  return n;
}

/// Distinct actors engaging in a snapshot, in key order.
inline std::vector<ActorKey> engaging_actors(const Snapshot& s) {
  std::set<ActorKey> keys;
  for (const auto& it : s.engagements) keys.insert(it.actor());
  return {keys.begin(), keys.end()};
}

/// Labelled documents of the publisher published by time t, excluding the
/// document itself.
inline std::size_t publisher_history_depth(const Corpus& corpus, const DocumentRecord& doc, Timestamp t) {
  const auto* pub = corpus.find_publisher(doc.publisher_id);
  if (pub == nullptr) return 0;
  std::size_t n = 0;
  for (const auto& e : pub->history) {
    if (e.doc_id == doc.doc_id || e.label == Label::Unknown) continue;
    if (corpus.document(e.doc_id).publish_time <= t) ++n;
  }
  return n;
}

inline double reading_value(FactorId f, const Snapshot& snapshot, const Corpus& corpus) {
  const auto& doc = corpus.document(snapshot.doc_id);
  switch (f) {
    case FactorId::WordCount:
      return static_cast<double>(word_count(doc));
    case FactorId::EngagementCount:
      return static_cast<double>(snapshot.engagement_count());
    case FactorId::UserHistoryDepth: {
      auto actors = engaging_actors(snapshot);
      if (actors.empty()) return 0.0;
      double sum = 0.0;
      for (const auto& k : actors) {
        const auto* a = corpus.find_actor(k);
        if (a != nullptr) sum += static_cast<double>(labeled_history_depth(*a, snapshot.t));
      }
      return sum / static_cast<double>(actors.size());
    }
    case FactorId::PublisherHistoryDepth:
      return static_cast<double>(publisher_history_depth(corpus, doc, snapshot.t));
  }
  return 0.0;
}

/// One reading per factor id, in kAllFactors order.
inline std::vector<FactorReading> factor_readings(const Snapshot& snapshot, const Corpus& corpus) {
  std::vector<FactorReading> out;
  for (auto f : kAllFactors) out.push_back({f, reading_value(f, snapshot, corpus)});
  return out;
}

inline double find_reading(std::span<const FactorReading> readings, FactorId f) {
  for (const auto& r : readings) {
    if (r.factor == f) return r.value;
  }
  throw DataError("no reading for factor '" + std::string(to_string(f)) + "'");
}

}  // namespace veracity
