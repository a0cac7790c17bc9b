#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "veracity/common.hpp"
#include "veracity/corpus.hpp"
#include "veracity/features.hpp"

namespace veracity {

/// One planted group of coordinated actors on a single platform.
struct ClusterSpec {
  std::size_t size = 10;
  Intent intent = Intent::Malicious;
  std::string platform = "x";
  std::size_t bursts = 12;
};

struct SynthConfig {
  std::size_t n_docs = 2000;
  std::size_t n_publishers = 60;
  std::vector<std::string> platforms{"x", "fb"};
  std::size_t actors_per_platform = 250;

  /// Body length distribution as (token count, weight).
  std::vector<std::pair<std::size_t, double>> body_lengths{
      {8, 1}, {12, 1}, {16, 1}, {24, 1}, {32, 1}, {48, 1}, {64, 1}, {96, 1}, {128, 1}, {192, 1}, {256, 1}, {384, 1}};
  std::size_t title_tokens = 6;

  /// Share of tokens drawn from the affect lexicon.
  double affect_rate = 0.3;
  /// Affect tokens of a false document come from the false-leaning
  /// categories with probability 0.5 + affect_bias (true documents: 0.5 - bias).
  double affect_bias = 0.2;
  /// Documents with fewer total tokens than this get their label flipped at
  /// short_label_noise.
  std::size_t short_doc_tokens = 40;
  double short_label_noise = 0.2;

  /// Publishers lean false with probability publisher_bias or 1 - publisher_bias.
  double publisher_bias = 0.8;

  double mean_engagements = 40.0;
  /// Log-normal sigma of the per-document engagement rate multiplier.
  double engagement_spread = 1.0;
  /// Probability that an engager is drawn from the pool matching the document's class.
  double homophily = 0.75;
  double unknown_history_rate = 0.1;

  Timestamp start_time = 1'600'000'000;
  Timestamp span = 60 * kDay;
  Timestamp horizon = 14 * kDay;

  std::vector<ClusterSpec> clusters;
  Timestamp coordination_window = 60;

  std::size_t alias_pairs = 20;
  std::size_t url_pool = 4000;
  std::size_t hashtag_pool = 600;

  /// Throws UsageError for inconsistent settings.
  void validate() const {
    auto rate = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw UsageError(std::string(name) + " must lie in [0,1]");
    };
    if (n_docs == 0 || n_publishers == 0 || actors_per_platform == 0 || platforms.empty()) {
      throw UsageError("synthetic config sizes must be positive");
    }
    if (body_lengths.empty()) throw UsageError("body_lengths must not be empty");
    for (const auto& [len, w] : body_lengths) {
      if (w < 0.0) throw UsageError("body length weights must be non-negative");
      if (len == 0 && title_tokens == 0) throw UsageError("documents would be empty");
    }
    rate(affect_rate, "affect_rate");
    rate(short_label_noise, "short_label_noise");
    rate(publisher_bias, "publisher_bias");
    rate(homophily, "homophily");
    rate(unknown_history_rate, "unknown_history_rate");
    if (affect_bias < 0.0 || affect_bias > 0.5) throw UsageError("affect_bias must lie in [0,0.5]");
    if (mean_engagements < 0.0 || engagement_spread < 0.0) throw UsageError("engagement settings must be >= 0");
    if (span <= 0 || horizon <= 0 || coordination_window <= 0) throw UsageError("time spans must be positive");
    if (url_pool == 0 || hashtag_pool == 0) throw UsageError("pools must be non-empty");

    std::map<std::string, std::size_t> used;
    for (const auto& c : clusters) {
      if (c.size < 2) throw UsageError("cluster size must be at least 2");
      if (c.bursts == 0) throw UsageError("cluster bursts must be positive");
      if (std::find(platforms.begin(), platforms.end(), c.platform) == platforms.end()) {
        throw UsageError("cluster platform '" + c.platform + "' is not configured");
      }
      used[c.platform] += c.size;
    }
    for (const auto& [p, n] : used) {
      std::size_t reserved = (platforms.size() >= 2 && (p == platforms[0] || p == platforms[1])) ? alias_pairs : 0;
      if (n + reserved > actors_per_platform) {
        throw UsageError("cluster sizes on '" + p + "' exceed the actor count");
      }
    }
    if (alias_pairs > 0 && platforms.size() < 2) throw UsageError("alias pairs need two platforms");
    if (alias_pairs > actors_per_platform) throw UsageError("alias_pairs exceeds the actor count");
  }
};

struct DocTruth {
  std::string doc_id;
  Label label = Label::Unknown;
  Label latent_label = Label::Unknown;
  std::size_t token_count = 0;
  bool label_noised = false;

  bool operator==(const DocTruth&) const = default;
};

struct PlantedCluster {
  std::string cluster_id;
  Intent intent = Intent::Unknown;
  std::string platform;
  std::vector<std::string> actor_ids;

  bool operator==(const PlantedCluster&) const = default;
};

struct AliasPair {
  ActorKey a;
  ActorKey b;
  std::string signal;  // "handle" or "name"

  bool operator==(const AliasPair&) const = default;
};

/// Ground-truth sidecar emitted alongside a synthetic corpus.
struct GroundTruth {
  std::vector<DocTruth> documents;
  std::vector<PlantedCluster> clusters;
  std::vector<AliasPair> aliases;

  bool operator==(const GroundTruth&) const = default;

  std::string to_jsonl() const {
    std::ostringstream os;
    for (const auto& d : documents) {
      os << nlohmann::json{{"kind", "doc_truth"},        {"doc_id", d.doc_id},
                           {"label", to_string(d.label)}, {"latent_label", to_string(d.latent_label)},
                           {"token_count", d.token_count}, {"label_noised", d.label_noised}}
                .dump()
         << '\n';
    }
    for (const auto& c : clusters) {
      os << nlohmann::json{{"kind", "cluster"},     {"cluster_id", c.cluster_id}, {"intent", to_string(c.intent)},
                           {"platform", c.platform}, {"actor_ids", c.actor_ids}}
                .dump()
         << '\n';
    }
    for (const auto& a : aliases) {
      os << nlohmann::json{{"kind", "alias"},
                           {"a", {{"platform", a.a.platform}, {"actor_id", a.a.actor_id}}},
                           {"b", {{"platform", a.b.platform}, {"actor_id", a.b.actor_id}}},
                           {"signal", a.signal}}
                .dump()
         << '\n';
    }
    return os.str();
  }

  static GroundTruth parse(std::istream& in) {
    GroundTruth g;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto j = nlohmann::json::parse(line);
        auto kind = j.at("kind").get<std::string>();
        if (kind == "doc_truth") {
          g.documents.push_back({j.at("doc_id").get<std::string>(), label_from_string(j.at("label").get<std::string>()),
                                 label_from_string(j.at("latent_label").get<std::string>()),
                                 j.at("token_count").get<std::size_t>(), j.at("label_noised").get<bool>()});
        } else if (kind == "cluster") {
          g.clusters.push_back({j.at("cluster_id").get<std::string>(),
                                intent_from_string(j.at("intent").get<std::string>()),
                                j.at("platform").get<std::string>(),
                                j.at("actor_ids").get<std::vector<std::string>>()});
        } else if (kind == "alias") {
          auto key = [](const nlohmann::json& k) {
            return ActorKey{k.at("platform").get<std::string>(), k.at("actor_id").get<std::string>()};
          };
          g.aliases.push_back({key(j.at("a")), key(j.at("b")), j.at("signal").get<std::string>()});
        } else {
          throw DataError("unknown sidecar record kind '" + kind + "'");
        }
      } catch (const nlohmann::json::exception& e) {
        throw DataError("sidecar line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return g;
  }
};

struct SyntheticCorpus {
  Corpus corpus;
  GroundTruth truth;
};

namespace detail {

/// Draws from a fixed discrete distribution by inverse CDF.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(std::vector<double> weights) : cdf_(std::move(weights)) {
    double acc = 0.0;
    for (auto& w : cdf_) {
      acc += w;
      w = acc;
    }
    if (acc <= 0.0) throw UsageError("discrete distribution has zero mass");
    for (auto& w : cdf_) w /= acc;
  }

  template <typename Rng>
  std::size_t operator()(Rng& rng) const {
    double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

inline DiscreteSampler zipf_sampler(std::size_t n, double exponent = 1.0) {
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), exponent);
  return DiscreteSampler(std::move(w));
}

inline const std::vector<std::string>& syllables() {
  static const std::vector<std::string> s{"ka", "lo", "mi", "ren", "sa", "to", "vel", "dor", "an", "bri",
                                          "cal", "den", "fa", "gor", "hal", "is", "jo", "kri", "lun", "mar",
                                          "nev", "or", "pel", "qua", "ros", "sten", "tul", "ur", "vin", "wes",
                                          "xan", "yel", "zo", "bel", "cor", "dra", "el", "fin", "gal", "hen"};
  return s;
}

template <typename Rng>
std::string pseudo_word(Rng& rng, std::size_t min_syl, std::size_t max_syl) {
  const auto& syl = syllables();
  std::uniform_int_distribution<std::size_t> n(min_syl, max_syl);
  std::uniform_int_distribution<std::size_t> pick(0, syl.size() - 1);
  std::string w;
  std::size_t k = n(rng);
  for (std::size_t i = 0; i < k; ++i) w += syl[pick(rng)];
  return w;
}

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string zero_pad(std::size_t v, std::size_t width) {
  std::string s = std::to_string(v);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace detail

/// Deterministic synthetic corpus with planted ground truth.
///
/// Documents carry an affect signal whose strength grows with length, and
/// short documents receive label noise. Engagers are drawn preferentially
/// from a pool whose labelled history matches the document's class.
/// Coordinated clusters post shared URLs, hashtags and (for malicious
/// clusters) near-identical text within a fraction of the coordination window.
inline SyntheticCorpus generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto coin = [&](double p) { return unit(rng) < p; };

  const auto& lex = AffectLexicon::bundled();
  // Categories whose words lean towards false documents.
  static const std::set<std::string> kFalseLeaning{"anger", "disgust", "fear", "surprise"};
  std::vector<std::vector<std::string>> false_words, true_words;
  for (std::size_t c = 0; c < lex.category_count(); ++c) {
    (kFalseLeaning.contains(lex.categories()[c]) ? false_words : true_words).push_back(lex.words_in(c));
  }

  std::vector<std::string> neutral;
  {
    std::set<std::string> seen;
    while (neutral.size() < 600) {
      auto w = detail::pseudo_word(rng, 2, 3);
      if (lex.lookup(w).empty() && seen.insert(w).second) neutral.push_back(w);
    }
  }
  std::uniform_int_distribution<std::size_t> pick_neutral(0, neutral.size() - 1);

  auto affect_word = [&](bool leaning_false) {
    const auto& groups = leaning_false ? false_words : true_words;
    const auto& g = groups[std::uniform_int_distribution<std::size_t>(0, groups.size() - 1)(rng)];
    return g[std::uniform_int_distribution<std::size_t>(0, g.size() - 1)(rng)];
  };
  auto make_text = [&](std::size_t n, bool is_false) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += ' ';
      if (coin(cfg.affect_rate)) {
        double p_false_cat = is_false ? 0.5 + cfg.affect_bias : 0.5 - cfg.affect_bias;
        out += affect_word(coin(p_false_cat));
      } else {
        out += neutral[pick_neutral(rng)];
      }
    }
    return out;
  };

  SyntheticCorpus result;
  auto& truth = result.truth;

  // Publishers.
  std::vector<Publisher> publishers(cfg.n_publishers);
  std::vector<double> pub_false(cfg.n_publishers);
  for (std::size_t p = 0; p < cfg.n_publishers; ++p) {
    publishers[p].publisher_id = "pub" + detail::zero_pad(p, 3);
    pub_false[p] = (p % 2 == 0) ? cfg.publisher_bias : 1.0 - cfg.publisher_bias;
  }

  // Documents.
  std::vector<double> length_weights;
  for (const auto& bl : cfg.body_lengths) length_weights.push_back(bl.second);
  detail::DiscreteSampler length_sampler(length_weights);
  std::uniform_int_distribution<std::size_t> pick_pub(0, cfg.n_publishers - 1);
  std::uniform_int_distribution<Timestamp> pick_time(0, cfg.span);

  std::vector<DocumentRecord> docs(cfg.n_docs);
  std::vector<bool> latent_false(cfg.n_docs);
  for (std::size_t d = 0; d < cfg.n_docs; ++d) {
    auto& doc = docs[d];
    doc.doc_id = "d" + detail::zero_pad(d, 5);
    doc.platform = "web";
    std::size_t pub = pick_pub(rng);
    doc.publisher_id = publishers[pub].publisher_id;
    doc.publish_time = cfg.start_time + pick_time(rng);
    bool is_false = coin(pub_false[pub]);
    latent_false[d] = is_false;
    std::size_t body_len = cfg.body_lengths[length_sampler(rng)].first;
    doc.title = make_text(cfg.title_tokens, is_false);
    doc.body = make_text(body_len, is_false);
    if (doc.title.empty() && doc.body.empty()) doc.body = neutral[pick_neutral(rng)];
    std::size_t tokens = word_count(doc);
    bool noised = tokens < cfg.short_doc_tokens && coin(cfg.short_label_noise);
    bool observed_false = noised ? !is_false : is_false;
    doc.label = observed_false ? Label::False : Label::True;
    truth.documents.push_back({doc.doc_id, doc.label, is_false ? Label::False : Label::True, tokens, noised});
    publishers[pub].history.push_back({doc.doc_id, doc.label});
  }

  // Actors.
  std::vector<Actor> actors;
  std::vector<bool> spreader;  // engages preferentially with false documents
  std::set<std::string> used_handles;
  std::size_t handle_counter = 0;
  auto fresh_name = [&]() {
    return detail::capitalize(detail::pseudo_word(rng, 2, 3)) + " " + detail::capitalize(detail::pseudo_word(rng, 2, 4));
  };
  auto fresh_handle = [&]() {
    std::string h;
    do {
      h = detail::capitalize(detail::pseudo_word(rng, 1, 2)) + "_" + detail::pseudo_word(rng, 2, 3) +
          std::to_string(handle_counter++);
    } while (!used_handles.insert(h).second);
    return h;
  };
  std::uniform_int_distribution<Timestamp> old_account(400 * kDay, 3000 * kDay);
  std::map<std::string, std::vector<std::size_t>> by_platform;
  for (const auto& platform : cfg.platforms) {
    for (std::size_t i = 0; i < cfg.actors_per_platform; ++i) {
      Actor a;
      a.platform = platform;
      a.actor_id = platform + "_a" + detail::zero_pad(i, 4);
      a.handle = fresh_handle();
      a.display_name = fresh_name();
      a.created_at = cfg.start_time - old_account(rng);
      by_platform[platform].push_back(actors.size());
      actors.push_back(std::move(a));
      spreader.push_back(coin(0.5));
    }
  }

  // Coordinated clusters take actors from the front of each platform's list,
  // alias pairs from the back.
  std::vector<int> cluster_of(actors.size(), -1);
  std::map<std::string, std::size_t> next_free;
  std::uniform_int_distribution<Timestamp> young_account(1 * kDay, 30 * kDay);
  for (std::size_t c = 0; c < cfg.clusters.size(); ++c) {
    const auto& spec = cfg.clusters[c];
    PlantedCluster pc;
    pc.cluster_id = "c" + std::to_string(c);
    pc.intent = spec.intent;
    pc.platform = spec.platform;
    auto& pool = by_platform[spec.platform];
    for (std::size_t k = 0; k < spec.size; ++k) {
      std::size_t idx = pool[next_free[spec.platform]++];
      cluster_of[idx] = static_cast<int>(c);
      if (spec.intent == Intent::Malicious) actors[idx].created_at = cfg.start_time - young_account(rng);
      pc.actor_ids.push_back(actors[idx].actor_id);
    }
    truth.clusters.push_back(std::move(pc));
  }

  std::vector<std::pair<std::size_t, std::size_t>> name_aliases;
  if (cfg.alias_pairs > 0) {
    auto& pa = by_platform[cfg.platforms[0]];
    auto& pb = by_platform[cfg.platforms[1]];
    for (std::size_t k = 0; k < cfg.alias_pairs; ++k) {
      std::size_t ia = pa[pa.size() - 1 - k];
      std::size_t ib = pb[pb.size() - 1 - k];
      auto& a = actors[ia];
      auto& b = actors[ib];
      AliasPair ap{a.key(), b.key(), ""};
      if (k % 2 == 0) {
        // Same handle up to case and punctuation.
        std::string h;
        for (char ch : a.handle) {
          if (std::isalnum(static_cast<unsigned char>(ch))) h += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
        used_handles.erase(b.handle);
        b.handle = h;
        b.display_name = a.display_name;
        ap.signal = "handle";
      } else {
        // Near-identical display name plus shared personal URLs.
        std::string name = a.display_name;
        std::size_t drop = name.size() - 2;  // drop a letter near the end of the surname
        name.erase(drop, 1);
        b.display_name = name;
        ap.signal = "name";
        name_aliases.emplace_back(ia, ib);
      }
      truth.aliases.push_back(std::move(ap));
    }
  }

  // Organic engagement pools per platform and class.
  std::map<std::string, std::vector<std::size_t>> pool_false, pool_true, pool_all;
  for (std::size_t i = 0; i < actors.size(); ++i) {
    if (cluster_of[i] >= 0 && cfg.clusters[static_cast<std::size_t>(cluster_of[i])].intent == Intent::Malicious) {
      continue;
    }
    const auto& p = actors[i].platform;
    pool_all[p].push_back(i);
    (spreader[i] ? pool_false : pool_true)[p].push_back(i);
  }

  auto url_sampler = detail::zipf_sampler(cfg.url_pool);
  auto tag_sampler = detail::zipf_sampler(cfg.hashtag_pool);
  std::lognormal_distribution<double> rate_mult(-0.5 * cfg.engagement_spread * cfg.engagement_spread,
                                                cfg.engagement_spread);
  std::uniform_int_distribution<std::size_t> pick_platform(0, cfg.platforms.size() - 1);
  detail::DiscreteSampler kind_sampler({0.3, 0.3, 0.2, 0.2});

  std::vector<EngagementItem> items;
  auto new_item = [&](const DocumentRecord& doc, std::size_t actor_idx, Timestamp ts, EngagementKind kind) {
    EngagementItem it;
    it.item_id = "i" + detail::zero_pad(items.size(), 7);
    it.doc_id = doc.doc_id;
    it.actor_id = actors[actor_idx].actor_id;
    it.platform = actors[actor_idx].platform;
    it.timestamp = ts;
    it.kind = kind;
    return it;
  };
  auto random_text = [&](std::size_t lo, std::size_t hi) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += ' ';
      out += neutral[pick_neutral(rng)];
    }
    return out;
  };
  auto pick_from = [&](const std::vector<std::size_t>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };

  std::uniform_real_distribution<double> in_horizon(0.0, static_cast<double>(cfg.horizon));
  for (std::size_t d = 0; d < cfg.n_docs; ++d) {
    const auto& doc = docs[d];
    double lambda = cfg.mean_engagements * rate_mult(rng);
    std::size_t n = lambda > 0.0 ? std::poisson_distribution<std::size_t>(lambda)(rng) : 0;
    for (std::size_t e = 0; e < n; ++e) {
      const auto& platform = cfg.platforms[pick_platform(rng)];
      const auto& matching = latent_false[d] ? pool_false[platform] : pool_true[platform];
      const auto& everyone = pool_all[platform];
      if (everyone.empty()) continue;
      std::size_t actor = (!matching.empty() && coin(cfg.homophily)) ? pick_from(matching) : pick_from(everyone);
      auto kind = static_cast<EngagementKind>(kind_sampler(rng));
      auto it = new_item(doc, actor, doc.publish_time + static_cast<Timestamp>(in_horizon(rng)), kind);
      if (kind != EngagementKind::Like) {
        if (coin(0.4)) it.urls.push_back("https://site" + std::to_string(url_sampler(rng)) + ".example/a");
        if (coin(0.3)) it.hashtags.push_back("#t" + std::to_string(tag_sampler(rng)));
        if (coin(0.1)) it.mentions.push_back("@" + actors[pick_from(everyone)].handle);
        if (kind != EngagementKind::Share && coin(0.3)) it.text = random_text(8, 14);
      }
      items.push_back(std::move(it));
    }
  }

  // Personal URLs shared by name-linked aliases.
  std::uniform_int_distribution<std::size_t> pick_doc(0, cfg.n_docs - 1);
  for (std::size_t k = 0; k < name_aliases.size(); ++k) {
    auto [ia, ib] = name_aliases[k];
    for (std::size_t u = 0; u < 3; ++u) {
      std::string url = "https://home" + std::to_string(k) + ".example/p" + std::to_string(u);
      for (std::size_t who : {ia, ib}) {
        const auto& doc = docs[pick_doc(rng)];
        auto it = new_item(doc, who, doc.publish_time + static_cast<Timestamp>(in_horizon(rng)), EngagementKind::Post);
        it.urls.push_back(url);
        items.push_back(std::move(it));
      }
    }
  }

  // Coordinated bursts.
  const Timestamp spread = std::max<Timestamp>(1, cfg.coordination_window / 2);
  for (std::size_t c = 0; c < cfg.clusters.size(); ++c) {
    const auto& spec = cfg.clusters[c];
    const auto& members = truth.clusters[c].actor_ids;
    std::string tag = "#campaign" + std::to_string(c);
    std::string slogan = random_text(14, 18);
    for (std::size_t b = 0; b < spec.bursts; ++b) {
      const auto& doc = docs[pick_doc(rng)];
      Timestamp burst = doc.publish_time + static_cast<Timestamp>(in_horizon(rng) * 0.9);
      std::string url = "https://campaign" + std::to_string(c) + ".example/b" + std::to_string(b);
      for (const auto& member_id : members) {
        std::size_t idx = 0;
        for (std::size_t i : by_platform[spec.platform]) {
          if (actors[i].actor_id == member_id) idx = i;
        }
        std::size_t posts = spec.intent == Intent::Malicious ? std::uniform_int_distribution<std::size_t>(2, 3)(rng) : 1;
        for (std::size_t p = 0; p < posts; ++p) {
          Timestamp ts = burst + std::uniform_int_distribution<Timestamp>(0, spread)(rng);
          auto it = new_item(doc, idx, ts, p == 0 ? EngagementKind::Post : EngagementKind::Share);
          it.urls.push_back(url);
          it.hashtags.push_back(tag);
          it.text = spec.intent == Intent::Malicious ? slogan : random_text(8, 14);
          items.push_back(std::move(it));
        }
      }
    }
  }

  // Frozen labelled histories: first engagement per (actor, document).
  {
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return items[a].timestamp < items[b].timestamp; });
    std::map<std::string, std::size_t> doc_pos;
    for (std::size_t d = 0; d < docs.size(); ++d) doc_pos[docs[d].doc_id] = d;
    std::map<ActorKey, std::size_t> actor_pos;
    for (std::size_t i = 0; i < actors.size(); ++i) actor_pos[actors[i].key()] = i;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t i : order) {
      const auto& it = items[i];
      std::size_t a = actor_pos.at(it.actor());
      std::size_t d = doc_pos.at(it.doc_id);
      if (!seen.emplace(a, d).second) continue;
      Label l = coin(cfg.unknown_history_rate) ? Label::Unknown : docs[d].label;
      actors[a].engagement_history.push_back({it.doc_id, l, it.timestamp});
    }
  }

  result.corpus = Corpus::build(std::move(docs), std::move(items), std::move(actors), std::move(publishers));
  return result;
}

}  // namespace veracity
