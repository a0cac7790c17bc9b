#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "veracity/common.hpp"
#include "veracity/coordination.hpp"
#include "veracity/corpus.hpp"

namespace veracity {

// ---------------------------------------------------------------------------
// Behaviour features

inline const std::vector<std::string>& intent_feature_names() {
  static const std::vector<std::string> names{"log_account_age_days", "interevent_cv", "content_diversity",
                                              "burstiness", "coordinated_fraction"};
  return names;
}

/// Per-actor behaviour vector, in intent_feature_names() order:
///  - log(1 + account age in days at the actor's first event)
///  - coefficient of variation of gaps between distinct event times
///  - distinct near-duplicate text groups / text events (1 without text)
///  - burstiness (sigma - mu) / (sigma + mu) of the same gaps
///  - share of events matched by another actor's identical value within `window`
inline std::map<ActorKey, std::vector<double>> intent_features(std::span<const ActorTrace> traces, const Corpus& corpus,
                                                               Timestamp window) {
  if (window <= 0) throw UsageError("coordination window must be positive");

  // For the coordinated share: sorted (time, actor) occurrences per value.
  std::map<std::pair<CharacteristicKind, std::string>, std::vector<std::pair<Timestamp, std::size_t>>> by_value;
  for (std::size_t a = 0; a < traces.size(); ++a) {
    for (const auto& e : traces[a].events) by_value[{e.kind, e.value}].emplace_back(e.timestamp, a);
  }
  for (auto& [k, occ] : by_value) std::sort(occ.begin(), occ.end());

  std::map<ActorKey, std::vector<double>> out;
  for (std::size_t a = 0; a < traces.size(); ++a) {
    const auto& tr = traces[a];
    std::vector<double> f(5, 0.0);
    if (!tr.events.empty()) {
      const auto* actor = corpus.find_actor(tr.actor);
      double created = actor ? static_cast<double>(actor->created_at) : static_cast<double>(tr.events.front().timestamp);
      double age_days = std::max(0.0, (static_cast<double>(tr.events.front().timestamp) - created) / kDay);
      f[0] = std::log1p(age_days);

      std::vector<Timestamp> times;
      for (const auto& e : tr.events) {
        if (times.empty() || times.back() != e.timestamp) times.push_back(e.timestamp);
      }
      if (times.size() >= 3) {
        std::vector<double> gaps;
        for (std::size_t i = 1; i < times.size(); ++i) gaps.push_back(static_cast<double>(times[i] - times[i - 1]));
        double mu = 0.0;
        for (double g : gaps) mu += g;
        mu /= static_cast<double>(gaps.size());
        double var = 0.0;
        for (double g : gaps) var += (g - mu) * (g - mu);
        double sigma = std::sqrt(var / static_cast<double>(gaps.size()));
        if (mu > 0.0) f[1] = sigma / mu;
        if (sigma + mu > 0.0) f[3] = (sigma - mu) / (sigma + mu);
      }

      std::set<std::string> text_groups;
      std::size_t text_events = 0;
      std::size_t coordinated = 0;
      for (const auto& e : tr.events) {
        if (e.kind == CharacteristicKind::TextShingle) {
          ++text_events;
          text_groups.insert(e.value);
        }
        const auto& occ = by_value[{e.kind, e.value}];
        auto lo = std::lower_bound(occ.begin(), occ.end(), std::make_pair(e.timestamp - window, std::size_t{0}));
        for (auto it = lo; it != occ.end() && it->first <= e.timestamp + window; ++it) {
          if (it->second != a) {
            ++coordinated;
            break;
          }
        }
      }
      f[2] = text_events == 0 ? 1.0 : static_cast<double>(text_groups.size()) / static_cast<double>(text_events);
      f[4] = static_cast<double>(coordinated) / static_cast<double>(tr.events.size());
    }
    out[tr.actor] = std::move(f);
  }
  return out;
}

/// Per-feature z-scoring fitted on training rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DataError("standardizer: no rows");
    const std::size_t dim = rows.front().size();
    Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < dim; ++j) s.mean[j] += r[j];
    }
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < dim; ++j) s.scale[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
    }
    for (auto& v : s.scale) {
      v = std::sqrt(v / static_cast<double>(rows.size()));
      if (v < 1e-12) v = 1.0;
    }
    return s;
  }

  std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
  }
};

// ---------------------------------------------------------------------------
// Contrastive linear embedding

/// Row-major dim x features projection.
struct LinearEmbedding {
  std::size_t dim = 0;
  std::size_t features = 0;
  std::vector<double> w;

  std::vector<double> embed(std::span<const double> x) const {
    std::vector<double> out(dim, 0.0);
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < features; ++c) out[r] += w[r * features + c] * x[c];
    }
    return out;
  }
};

struct ContrastivePair {
  std::size_t u = 0;
  std::size_t v = 0;
  bool same = true;
};

struct ContrastiveHyper {
  double margin = 1.0;
  double rate = 0.1;
  std::size_t epochs = 300;
  std::size_t dim = 2;
  std::uint64_t seed = 11;
};

/// sum_same d^2 + sum_diff max(0, m - d)^2 with d = |W (x_u - x_v)|.
/// The subgradient at d = 0 for a different-intent pair is taken as zero.
inline double contrastive_objective(const LinearEmbedding& emb, const std::vector<std::vector<double>>& x,
                                    std::span<const ContrastivePair> pairs, double margin, std::vector<double>* grad) {
  if (grad) grad->assign(emb.w.size(), 0.0);
  double loss = 0.0;
  std::vector<double> delta(emb.features);
  for (const auto& p : pairs) {
    for (std::size_t c = 0; c < emb.features; ++c) delta[c] = x[p.u][c] - x[p.v][c];
    auto e = emb.embed(delta);
    double d2 = 0.0;
    for (double v : e) d2 += v * v;
    double coef = 0.0;  // gradient = coef * e delta^T
    if (p.same) {
      loss += d2;
      coef = 2.0;
    } else {
      double d = std::sqrt(d2);
      if (d < margin) {
        loss += (margin - d) * (margin - d);
        if (d > 0.0) coef = -2.0 * (margin - d) / d;
      }
    }
    if (grad && coef != 0.0) {
      for (std::size_t r = 0; r < emb.dim; ++r) {
        for (std::size_t c = 0; c < emb.features; ++c) (*grad)[r * emb.features + c] += coef * e[r] * delta[c];
      }
    }
  }
  return loss;
}

struct ContrastiveResult {
  LinearEmbedding embedding;
  std::vector<double> loss_trace;
};

/// Gradient descent on the contrastive objective; the step is rate divided
/// by the pair count. Starts from `init` (fine-tuning) or a seeded Gaussian.
inline ContrastiveResult intent_train(std::span<const ContrastivePair> pairs, const std::vector<std::vector<double>>& x,
                                      const ContrastiveHyper& hyper,
                                      const std::optional<LinearEmbedding>& init = std::nullopt) {
  if (x.empty() || x.front().empty()) throw DataError("intent_train: zero-dimensional features");
  bool has_same = false, has_diff = false;
  for (const auto& p : pairs) {
    (p.same ? has_same : has_diff) = true;
    if (p.u >= x.size() || p.v >= x.size()) throw DataError("intent_train: pair index out of range");
  }
  if (!has_same || !has_diff) throw DataError("intent_train: need both same- and different-intent pairs");

  ContrastiveResult res;
  if (init) {
    if (init->features != x.front().size()) throw DataError("intent_train: initial embedding width mismatch");
    res.embedding = *init;
  } else {
    if (hyper.dim == 0) throw UsageError("intent_train: embedding dimension must be positive");
    res.embedding.dim = hyper.dim;
    res.embedding.features = x.front().size();
    res.embedding.w.resize(hyper.dim * res.embedding.features);
    std::mt19937_64 rng(hyper.seed);
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(static_cast<double>(res.embedding.features)));
    for (auto& v : res.embedding.w) v = g(rng);
  }

  const double step = hyper.rate / static_cast<double>(pairs.size());
  std::vector<double> grad;
  for (std::size_t e = 0; e < hyper.epochs; ++e) {
    double loss = contrastive_objective(res.embedding, x, pairs, hyper.margin, &grad);
    if (!std::isfinite(loss)) throw DataError("intent_train: non-finite loss");
    res.loss_trace.push_back(loss);
    for (std::size_t k = 0; k < grad.size(); ++k) res.embedding.w[k] -= step * grad[k];
  }
  res.loss_trace.push_back(contrastive_objective(res.embedding, x, pairs, hyper.margin, nullptr));
  return res;
}

/// Every labelled pair (i < j), subsampled with a seed when above max_pairs.
inline std::vector<ContrastivePair> make_pairs(std::span<const Intent> labels, std::size_t max_pairs,
                                               std::uint64_t seed) {
  std::vector<ContrastivePair> pairs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Intent::Unknown) continue;
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (labels[j] == Intent::Unknown) continue;
      pairs.push_back({i, j, labels[i] == labels[j]});
    }
  }
  if (pairs.size() > max_pairs) {
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    pairs.resize(max_pairs);
  }
  return pairs;
}

using Centroids = std::map<Intent, std::vector<double>>;

inline Centroids fit_centroids(const LinearEmbedding& emb, const std::vector<std::vector<double>>& x,
                               std::span<const Intent> labels) {
  Centroids c;
  std::map<Intent, double> n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (labels[i] == Intent::Unknown) continue;
    auto e = emb.embed(x[i]);
    auto& acc = c[labels[i]];
    if (acc.empty()) acc.assign(emb.dim, 0.0);
    for (std::size_t r = 0; r < emb.dim; ++r) acc[r] += e[r];
    n[labels[i]] += 1.0;
  }
  for (auto& [l, acc] : c) {
    for (auto& v : acc) v /= n[l];
  }
  return c;
}

/// Nearest centroid in embedded space; an exact distance tie is Unknown.
inline Intent intent_classify(const LinearEmbedding& emb, const Centroids& centroids, std::span<const double> x) {
  if (!centroids.contains(Intent::Malicious) || !centroids.contains(Intent::Benign)) {
    throw DataError("intent_classify: centroids are not fitted");
  }
  auto e = emb.embed(x);
  auto dist2 = [&](const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t r = 0; r < e.size(); ++r) s += (e[r] - c[r]) * (e[r] - c[r]);
    return s;
  };
  double dm = dist2(centroids.at(Intent::Malicious));
  double db = dist2(centroids.at(Intent::Benign));
  if (dm == db) return Intent::Unknown;
  return dm < db ? Intent::Malicious : Intent::Benign;
}

/// Standardizer + embedding + centroids, trained from labelled actors.
class IntentModel {
 public:
  IntentModel() = default;

  /// Pre-training: fits the standardizer, the embedding and the centroids.
  static IntentModel train(const std::vector<std::vector<double>>& features, std::span<const Intent> labels,
                           const ContrastiveHyper& hyper, std::size_t max_pairs = 20000) {
    IntentModel m;
    m.standardizer_ = Standardizer::fit(features);
    auto z = m.standardize_all(features);
    auto pairs = make_pairs(labels, max_pairs, hyper.seed);
    auto res = intent_train(pairs, z, hyper);
    m.embedding_ = res.embedding;
    m.loss_trace_ = res.loss_trace;
    m.centroids_ = fit_centroids(m.embedding_, z, labels);
    return m;
  }

  /// Fine-tuning: continues descent from the current embedding on a small
  /// labelled target sample and refits the centroids on it.
  void fine_tune(const std::vector<std::vector<double>>& features, std::span<const Intent> labels,
                 const ContrastiveHyper& hyper, std::size_t max_pairs = 20000) {
    auto z = standardize_all(features);
    auto pairs = make_pairs(labels, max_pairs, hyper.seed);
    auto res = intent_train(pairs, z, hyper, embedding_);
    embedding_ = res.embedding;
    loss_trace_ = res.loss_trace;
    centroids_ = fit_centroids(embedding_, z, labels);
  }

  Intent classify(std::span<const double> features) const {
    return intent_classify(embedding_, centroids_, standardizer_.apply(features));
  }

  const LinearEmbedding& embedding() const { return embedding_; }
  const Centroids& centroids() const { return centroids_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }

  nlohmann::json to_json() const {
    nlohmann::json c = nlohmann::json::object();
    for (const auto& [l, v] : centroids_) c[std::string(to_string(l))] = v;
    return {{"format", "veracity-intent"},
            {"version", 1},
            {"mean", standardizer_.mean},
            {"scale", standardizer_.scale},
            {"dim", embedding_.dim},
            {"features", embedding_.features},
            {"weights", embedding_.w},
            {"centroids", c}};
  }

  static IntentModel from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "veracity-intent") throw DataError("not an intent model");
    IntentModel m;
    m.standardizer_.mean = j.at("mean").get<std::vector<double>>();
    m.standardizer_.scale = j.at("scale").get<std::vector<double>>();
    m.embedding_.dim = j.at("dim").get<std::size_t>();
    m.embedding_.features = j.at("features").get<std::size_t>();
    m.embedding_.w = j.at("weights").get<std::vector<double>>();
    for (const auto& [k, v] : j.at("centroids").items()) m.centroids_[intent_from_string(k)] = v.get<std::vector<double>>();
    return m;
  }

 private:
  std::vector<std::vector<double>> standardize_all(const std::vector<std::vector<double>>& rows) const {
    std::vector<std::vector<double>> z;
    z.reserve(rows.size());
    for (const auto& r : rows) z.push_back(standardizer_.apply(r));
    return z;
  }

  Standardizer standardizer_;
  LinearEmbedding embedding_;
  Centroids centroids_;
  std::vector<double> loss_trace_;
};

// ---------------------------------------------------------------------------
// End-to-end scan

struct CoordinationOptions {
  Timestamp window = 60;
  CommunityOptions communities;
  std::size_t n_shuffles = 200;
  std::uint64_t seed = 23;
  TraceOptions traces;
};

struct CoordinationReport {
  std::vector<Community> communities;
  SimilarityGraph graph;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : communities) {
      std::vector<std::string> ids;
      for (const auto& a : c.actors) ids.push_back(a.str());
      arr.push_back({{"actors", ids}, {"extent", c.extent}, {"sync_z", c.sync_z}, {"intent", to_string(c.intent)}});
    }
    return {{"format", "veracity-coordination"}, {"version", 1}, {"communities", std::move(arr)}};
  }
};

/// Traces -> similarity graph -> communities with extent, synchronization
/// z-score and (when a model is given) majority member intent.
inline CoordinationReport coordination_scan(const Corpus& corpus, const CoordinationOptions& opt,
                                            const IntentModel* intent_model = nullptr) {
  auto traces = extract_traces(corpus, opt.traces);
  CoordinationReport rep;
  rep.graph = build_similarity_graph(traces, opt.window);
  rep.communities = detect_communities(rep.graph, opt.communities);
  std::map<ActorKey, std::vector<double>> features;
  if (intent_model != nullptr) features = intent_features(traces, corpus, opt.window);
  for (std::size_t k = 0; k < rep.communities.size(); ++k) {
    auto& c = rep.communities[k];
    c.sync_z = synchronization_score(c.actors, traces, opt.window, opt.n_shuffles, opt.seed + k);
    if (intent_model != nullptr) {
      std::size_t mal = 0, ben = 0;
      for (const auto& a : c.actors) {
        auto i = intent_model->classify(features.at(a));
        if (i == Intent::Malicious) ++mal;
        if (i == Intent::Benign) ++ben;
      }
      c.intent = mal > ben ? Intent::Malicious : (ben > mal ? Intent::Benign : Intent::Unknown);
    }
  }
  return rep;
}

}  // namespace veracity
