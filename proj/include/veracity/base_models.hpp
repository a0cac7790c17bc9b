#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "veracity/common.hpp"
#include "veracity/corpus.hpp"
#include "veracity/features.hpp"

namespace veracity {

struct BaseModelOutput {
  std::string model_id;
  double p = 0.5;  // falsehood probability
  std::vector<FactorId> factor_ids_used;
};

/// Signed contribution of one input feature to a model's score.
struct Attribution {
  std::string feature;
  double value = 0.0;

  bool operator==(const Attribution&) const = default;
};

/// Contract every base detector satisfies. predict() must be deterministic
/// after training and must never read the scored document's own label.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual std::string model_id() const = 0;
  virtual void train(const Corpus& corpus, std::span<const std::string> train_ids) = 0;
  virtual BaseModelOutput predict(const Snapshot& snapshot, const Corpus& corpus) const = 0;
  virtual std::vector<FactorId> required_factors() const = 0;
  virtual nlohmann::json to_json() const = 0;

  /// Top feature attributions; empty for models without a feature vector.
  virtual std::vector<Attribution> attributions(const Snapshot& /*snapshot*/, const Corpus& /*corpus*/,
                                                std::size_t /*top*/) const {
    return {};
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

/// ln(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// ---------------------------------------------------------------------------
// AffectFlow: logistic regression over segment-affect flow features.

struct AffectFlowHyper {
  double learning_rate = 0.5;
  std::size_t epochs = 300;
  double l2 = 1e-3;
  std::uint64_t seed = 7;
  std::size_t segments = 10;
};

/// Mean logistic loss plus (l2/2)|w|^2 (bias unpenalized). params = [w..., b].
/// Labels are 1 for false documents. Fills grad when non-null.
inline double logistic_objective(std::span<const double> params, const std::vector<std::vector<double>>& x,
                                 std::span<const double> y, double l2, std::vector<double>* grad) {
  const std::size_t dim = params.size() - 1;
  const double bias = params[dim];
  const double n = static_cast<double>(x.size());
  if (grad) grad->assign(params.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = bias;
    for (std::size_t j = 0; j < dim; ++j) z += params[j] * x[i][j];
    // -[y log s + (1-y) log(1-s)] = softplus(z) - y z
    loss += softplus(z) - y[i] * z;
    if (grad) {
      double r = (sigmoid(z) - y[i]) / n;
      for (std::size_t j = 0; j < dim; ++j) (*grad)[j] += r * x[i][j];
      (*grad)[dim] += r;
    }
  }
  loss /= n;
  for (std::size_t j = 0; j < dim; ++j) {
    loss += 0.5 * l2 * params[j] * params[j];
    if (grad) (*grad)[j] += l2 * params[j];
  }
  return loss;
}

class AffectFlowModel : public Detector {
 public:
  explicit AffectFlowModel(AffectFlowHyper hyper = {}, const AffectLexicon* lexicon = nullptr)
      : hyper_(hyper), lexicon_(lexicon ? lexicon : &AffectLexicon::bundled()) {
    if (hyper_.segments == 0) throw UsageError("affectflow segments must be positive");
    weights_.assign(input_dimension(), 0.0);
  }

  std::string model_id() const override { return "affectflow"; }
  std::vector<FactorId> required_factors() const override { return {FactorId::WordCount}; }

  std::size_t input_dimension() const { return FlowVector::dimension(hyper_.segments, lexicon_->category_count()); }

  /// Fixed-width model input: the document's K' segments are mapped onto K
  /// slots (slot j reads segment floor(j*K'/K)) and the flow vector is
  /// built over the slots.
  std::vector<double> model_input(const DocumentRecord& doc) const {
    auto tokens = document_tokens(doc);
    if (tokens.empty()) throw DataError("document '" + doc.doc_id + "' has no text");
    auto segs = segment_tokens(tokens, hyper_.segments);
    std::vector<Segment> slots;
    slots.reserve(hyper_.segments);
    for (std::size_t j = 0; j < hyper_.segments; ++j) slots.push_back(segs[j * segs.size() / hyper_.segments]);
    return flow_from_segments(slots, *lexicon_).values;
  }

  /// Full-batch gradient descent from zero weights on standardized inputs;
  /// the standardization is folded back into (w, b) afterwards.
  void fit(const std::vector<std::vector<double>>& x, std::span<const double> y) {
    if (x.empty()) throw DataError("affectflow: empty training split");
    bool has_pos = false, has_neg = false;
    for (double v : y) (v > 0.5 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw DataError("affectflow: training split has a single class");
    const std::size_t dim = input_dimension();
    for (const auto& row : x) {
      if (row.size() != dim) throw DataError("affectflow: input dimension mismatch");
    }

    std::vector<double> mean(dim, 0.0), scale(dim, 0.0);
    for (const auto& row : x) {
      for (std::size_t j = 0; j < dim; ++j) mean[j] += row[j];
    }
    for (auto& m : mean) m /= static_cast<double>(x.size());
    for (const auto& row : x) {
      for (std::size_t j = 0; j < dim; ++j) scale[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    }
    for (auto& s : scale) {
      s = std::sqrt(s / static_cast<double>(x.size()));
      if (s < 1e-12) s = 1.0;
    }
    std::vector<std::vector<double>> z(x.size(), std::vector<double>(dim));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) z[i][j] = (x[i][j] - mean[j]) / scale[j];
    }

    std::vector<double> params(dim + 1, 0.0), grad;
    loss_trace_.clear();
    for (std::size_t e = 0; e < hyper_.epochs; ++e) {
      double loss = logistic_objective(params, z, y, hyper_.l2, &grad);
      if (!std::isfinite(loss)) throw DataError("affectflow: non-finite loss");
      loss_trace_.push_back(loss);
      for (std::size_t j = 0; j <= dim; ++j) params[j] -= hyper_.learning_rate * grad[j];
    }
    if (hyper_.epochs > 0) loss_trace_.push_back(logistic_objective(params, z, y, hyper_.l2, nullptr));

    bias_ = params[dim];
    for (std::size_t j = 0; j < dim; ++j) {
      weights_[j] = params[j] / scale[j];
      bias_ -= params[j] * mean[j] / scale[j];
    }
  }

  void train(const Corpus& corpus, std::span<const std::string> train_ids) override {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& id : train_ids) {
      const auto& doc = corpus.document(id);
      if (doc.label == Label::Unknown) continue;
      x.push_back(model_input(doc));
      y.push_back(doc.label == Label::False ? 1.0 : 0.0);
    }
    fit(x, y);
  }

  double score(const std::vector<double>& input) const {
    double z = bias_;
    for (std::size_t j = 0; j < weights_.size(); ++j) z += weights_[j] * input[j];
    return z;
  }

  BaseModelOutput predict(const Snapshot& snapshot, const Corpus& corpus) const override {
    const auto& doc = corpus.document(snapshot.doc_id);
    return {model_id(), sigmoid(score(model_input(doc))), required_factors()};
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    const auto& cats = lexicon_->categories();
    for (std::size_t s = 0; s < hyper_.segments; ++s) {
      for (const auto& c : cats) names.push_back("segment" + std::to_string(s) + "." + c);
    }
    for (std::size_t s = 1; s < hyper_.segments; ++s) {
      for (const auto& c : cats) names.push_back("delta" + std::to_string(s) + "." + c);
    }
    return names;
  }

  /// weight x feature products, largest |value| first, ties by feature index.
  std::vector<Attribution> attributions(const Snapshot& snapshot, const Corpus& corpus,
                                        std::size_t top) const override {
    auto input = model_input(corpus.document(snapshot.doc_id));
    auto names = feature_names();
    std::vector<std::size_t> idx(input.size());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(weights_[a] * input[a]) > std::abs(weights_[b] * input[b]);
    });
    std::vector<Attribution> out;
    for (std::size_t k = 0; k < std::min(top, idx.size()); ++k) {
      out.push_back({names[idx[k]], weights_[idx[k]] * input[idx[k]]});
    }
    return out;
  }

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  void set_parameters(std::vector<double> w, double b) {
    if (w.size() != input_dimension()) throw DataError("affectflow: weight dimension mismatch");
    weights_ = std::move(w);
    bias_ = b;
  }
  const AffectFlowHyper& hyper() const { return hyper_; }
  const std::vector<double>& loss_trace() const { return loss_trace_; }

  nlohmann::json to_json() const override {
    return {{"type", "affectflow"},
            {"hyper",
             {{"learning_rate", hyper_.learning_rate},
              {"epochs", hyper_.epochs},
              {"l2", hyper_.l2},
              {"seed", hyper_.seed},
              {"segments", hyper_.segments}}},
            {"lexicon_hash", hex64(lexicon_->hash())},
            {"weights", weights_},
            {"bias", bias_}};
  }

  static std::unique_ptr<AffectFlowModel> from_json(const nlohmann::json& j, const AffectLexicon* lexicon) {
    const auto& h = j.at("hyper");
    AffectFlowHyper hyper{h.at("learning_rate").get<double>(), h.at("epochs").get<std::size_t>(),
                          h.at("l2").get<double>(), h.at("seed").get<std::uint64_t>(),
                          h.at("segments").get<std::size_t>()};
    auto m = std::make_unique<AffectFlowModel>(hyper, lexicon);
    if (j.at("lexicon_hash").get<std::string>() != hex64(m->lexicon_->hash())) {
      throw DataError("affectflow: model was trained with a different lexicon");
    }
    m->set_parameters(j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>());
    return m;
  }

 private:
  AffectFlowHyper hyper_;
  const AffectLexicon* lexicon_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::vector<double> loss_trace_;
};

// ---------------------------------------------------------------------------
// Credibility from labelled histories (Laplace-smoothed Beta posterior mean).

struct BetaPrior {
  double a = 1.0;
  double b = 1.0;
};

/// P(false) = (n_false + a) / (n_false + n_true + a + b).
inline double p_false_from_counts(std::size_t n_false, std::size_t n_true, BetaPrior prior = {}) {
  if (!(prior.a > 0.0) || !(prior.b > 0.0)) throw UsageError("credibility prior must be positive");
  return (static_cast<double>(n_false) + prior.a) /
         (static_cast<double>(n_false + n_true) + prior.a + prior.b);
}

/// 1 - P(false); unknown labels are ignored.
inline double credibility_score(std::span<const Label> history, BetaPrior prior = {}) {
  std::size_t nf = 0, nt = 0;
  for (auto l : history) {
    if (l == Label::False) ++nf;
    if (l == Label::True) ++nt;
  }
  return 1.0 - p_false_from_counts(nf, nt, prior);
}

struct SoftLogicHyper;

class PublisherCredibilityModel : public Detector {
 public:
  explicit PublisherCredibilityModel(BetaPrior prior = {}) : prior_(prior) { (void)p_false_from_counts(0, 0, prior); }

  std::string model_id() const override { return "pc"; }
  std::vector<FactorId> required_factors() const override { return {FactorId::PublisherHistoryDepth}; }

  /// Counts labels of the training documents per publisher.
  void train(const Corpus& corpus, std::span<const std::string> train_ids) override {
    labels_.clear();
    for (const auto& id : train_ids) {
      const auto& doc = corpus.document(id);
      if (doc.label != Label::Unknown) labels_[doc.publisher_id][doc.doc_id] = doc.label;
    }
  }

  /// Uses every Publisher record's history as training data.
  void fit_from_history(const Corpus& corpus) {
    labels_.clear();
    for (const auto& p : corpus.publishers()) {
      for (const auto& e : p.history) {
        if (e.label != Label::Unknown) labels_[p.publisher_id][e.doc_id] = e.label;
      }
    }
  }

  /// Switches to soft-logic refined publisher credibility over the whole
  /// corpus graph, anchored at `anchor_ids`. Defined after softlogic_refine.
  void refine_with_softlogic(const Corpus& corpus, std::span<const std::string> anchor_ids,
                             const SoftLogicHyper& hyper);

  bool refined() const { return refined_.has_value(); }

  /// P(false) for a publisher with `exclude` removed from its history.
  double publisher_p_false(std::string_view publisher_id, std::string_view exclude) const {
    if (refined_) {
      auto r = refined_->find(publisher_id);
      return r == refined_->end() ? 0.5 : r->second;
    }
    auto it = labels_.find(publisher_id);
    if (it == labels_.end()) return 0.5;
    std::size_t nf = 0, nt = 0;
    for (const auto& [doc, l] : it->second) {
      if (doc == exclude) continue;
      (l == Label::False ? nf : nt)++;
    }
    return p_false_from_counts(nf, nt, prior_);
  }

  BaseModelOutput predict(const Snapshot& snapshot, const Corpus& corpus) const override {
    const auto& doc = corpus.document(snapshot.doc_id);
    return {model_id(), publisher_p_false(doc.publisher_id, doc.doc_id), required_factors()};
  }

  nlohmann::json to_json() const override {
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [pub, docs] : labels_) {
      for (const auto& [doc, l] : docs) labels[pub][doc] = to_string(l);
    }
    nlohmann::json j = {{"type", "pc"}, {"prior", {prior_.a, prior_.b}}, {"labels", labels}};
    if (refined_) {
      nlohmann::json r = nlohmann::json::object();
      for (const auto& [pub, p] : *refined_) r[pub] = p;
      j["refined"] = std::move(r);
    }
    return j;
  }

  static std::unique_ptr<PublisherCredibilityModel> from_json(const nlohmann::json& j) {
    auto pr = j.at("prior");
    auto m = std::make_unique<PublisherCredibilityModel>(BetaPrior{pr.at(0).get<double>(), pr.at(1).get<double>()});
    for (const auto& [pub, docs] : j.at("labels").items()) {
      for (const auto& [doc, l] : docs.items()) m->labels_[pub][doc] = label_from_string(l.get<std::string>());
    }
    if (j.contains("refined")) {
      m->refined_.emplace();
      for (const auto& [pub, p] : j.at("refined").items()) (*m->refined_)[pub] = p.get<double>();
    }
    return m;
  }

 private:
  BetaPrior prior_;
  std::map<std::string, std::map<std::string, Label>, std::less<>> labels_;
  std::optional<std::map<std::string, double, std::less<>>> refined_;
};

class UserCredibilityModel : public Detector {
 public:
  explicit UserCredibilityModel(BetaPrior prior = {}) : prior_(prior) { (void)p_false_from_counts(0, 0, prior); }

  std::string model_id() const override { return "uc"; }
  std::vector<FactorId> required_factors() const override {
    return {FactorId::EngagementCount, FactorId::UserHistoryDepth};
  }

  /// Restricts actor histories to the training documents.
  void train(const Corpus& /*corpus*/, std::span<const std::string> train_ids) override {
    allowed_ = std::set<std::string, std::less<>>(train_ids.begin(), train_ids.end());
  }

  /// Every labelled history entry counts.
  void fit_all() { allowed_.reset(); }

  /// P(false) of one actor at time t, ignoring history about `exclude_doc`.
  /// Returns the number of labelled entries used through `depth`.
  double actor_p_false(const Actor& actor, Timestamp t, std::string_view exclude_doc, std::size_t& depth) const {
    std::size_t nf = 0, nt = 0;
    for (const auto& e : actor.engagement_history) {
      if (e.observed_at > t || e.label == Label::Unknown || e.doc_id == exclude_doc) continue;
      if (allowed_ && !allowed_->contains(e.doc_id)) continue;
      (e.label == Label::False ? nf : nt)++;
    }
    depth = nf + nt;
    return p_false_from_counts(nf, nt, prior_);
  }

  /// History-depth weighted mean of engager P(false); 0.5 without evidence.
  BaseModelOutput predict(const Snapshot& snapshot, const Corpus& corpus) const override {
    double num = 0.0, den = 0.0;
    for (const auto& key : engaging_actors(snapshot)) {
      const auto* actor = corpus.find_actor(key);
      if (actor == nullptr) continue;
      std::size_t depth = 0;
      double p = actor_p_false(*actor, snapshot.t, snapshot.doc_id, depth);
      num += static_cast<double>(depth) * p;
      den += static_cast<double>(depth);
    }
    return {model_id(), den > 0.0 ? num / den : 0.5, required_factors()};
  }

  nlohmann::json to_json() const override {
    nlohmann::json j = {{"type", "uc"}, {"prior", {prior_.a, prior_.b}}};
    if (allowed_) {
      j["allowed_docs"] = std::vector<std::string>(allowed_->begin(), allowed_->end());
    } else {
      j["allowed_docs"] = nullptr;
    }
    return j;
  }

  static std::unique_ptr<UserCredibilityModel> from_json(const nlohmann::json& j) {
    auto pr = j.at("prior");
    auto m = std::make_unique<UserCredibilityModel>(BetaPrior{pr.at(0).get<double>(), pr.at(1).get<double>()});
    if (!j.at("allowed_docs").is_null()) {
      auto ids = j.at("allowed_docs").get<std::vector<std::string>>();
      m->allowed_ = std::set<std::string, std::less<>>(ids.begin(), ids.end());
    }
    return m;
  }

 private:
  BetaPrior prior_;
  std::optional<std::set<std::string, std::less<>>> allowed_;
};

// ---------------------------------------------------------------------------
// Soft-logic refinement over the publisher <-> document <-> actor graph.

/// Variables in [0,1]; each edge (i, j) ties a source credibility to a
/// document truth value through the pair of squared hinges
/// max(0, x_i - x_j)^2 + max(0, x_j - x_i)^2. Anchors pull a variable to a label.
struct SoftLogicProblem {
  std::size_t n_vars = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::pair<std::size_t, double>> anchors;
};

struct SoftLogicHyper {
  double step = 0.1;
  std::size_t iters = 500;
};

struct SoftLogicResult {
  std::vector<double> values;
  std::vector<double> objective_trace;  // objective before each iteration, then the final one
  double step_used = 0.0;
};

inline double softlogic_objective(const SoftLogicProblem& prob, std::span<const double> x, std::vector<double>* grad) {
  if (grad) grad->assign(prob.n_vars, 0.0);
  double f = 0.0;
  for (const auto& [i, j] : prob.edges) {
    double up = std::max(0.0, x[i] - x[j]);
    double down = std::max(0.0, x[j] - x[i]);
    f += up * up + down * down;
    if (grad) {
      (*grad)[i] += 2.0 * up - 2.0 * down;
      (*grad)[j] += -2.0 * up + 2.0 * down;
    }
  }
  for (const auto& [i, target] : prob.anchors) {
    double d = x[i] - target;
    f += d * d;
    if (grad) (*grad)[i] += 2.0 * d;
  }
  return f;
}

/// Projected gradient descent from 0.5. The step is capped at 1/L, L being a
/// bound on the objective's gradient Lipschitz constant, which keeps the
/// objective non-increasing.
inline SoftLogicResult softlogic_refine(const SoftLogicProblem& prob, const SoftLogicHyper& hyper) {
  for (const auto& [i, j] : prob.edges) {
    if (i >= prob.n_vars || j >= prob.n_vars || i == j) throw DataError("softlogic: invalid edge");
  }
  for (const auto& [i, t] : prob.anchors) {
    if (i >= prob.n_vars || !(t >= 0.0 && t <= 1.0)) throw DataError("softlogic: invalid anchor");
  }
  std::vector<std::size_t> degree(prob.n_vars, 0);
  for (const auto& [i, j] : prob.edges) {
    ++degree[i];
    ++degree[j];
  }
  std::size_t max_deg = 0;
  for (auto d : degree) max_deg = std::max(max_deg, d);
  const double lipschitz = 4.0 * static_cast<double>(max_deg) + 2.0;

  SoftLogicResult res;
  res.step_used = std::min(hyper.step, 1.0 / lipschitz);
  res.values.assign(prob.n_vars, 0.5);
  std::vector<double> grad;
  for (std::size_t it = 0; it < hyper.iters; ++it) {
    double f = softlogic_objective(prob, res.values, &grad);
    if (!std::isfinite(f)) throw DataError("softlogic: non-finite objective");
    res.objective_trace.push_back(f);
    for (std::size_t v = 0; v < prob.n_vars; ++v) {
      res.values[v] = std::clamp(res.values[v] - res.step_used * grad[v], 0.0, 1.0);
    }
  }
  res.objective_trace.push_back(softlogic_objective(prob, res.values, nullptr));
  return res;
}

/// Refined credibilities keyed by "publisher:<id>", "actor:<platform>:<id>"
/// and document truth keyed by "doc:<id>".
struct CredibilityGraph {
  SoftLogicProblem problem;
  std::vector<std::string> names;
  std::map<std::string, std::size_t, std::less<>> index;

  std::size_t var(const std::string& name) {
    auto [it, inserted] = index.emplace(name, names.size());
    if (inserted) {
      names.push_back(name);
      problem.n_vars = names.size();
    }
    return it->second;
  }
};

/// Builds the publisher/actor -> document graph; documents in `anchor_ids`
/// are anchored to 1 (true) or 0 (false).
inline CredibilityGraph build_credibility_graph(const Corpus& corpus, std::span<const std::string> anchor_ids) {
  CredibilityGraph g;
  for (const auto& doc : corpus.documents()) {
    std::size_t d = g.var("doc:" + doc.doc_id);
    if (!doc.publisher_id.empty()) g.problem.edges.emplace_back(g.var("publisher:" + doc.publisher_id), d);
    std::set<ActorKey> seen;
    for (std::size_t i : corpus.items_for(doc.doc_id)) {
      auto key = corpus.items()[i].actor();
      if (seen.insert(key).second) g.problem.edges.emplace_back(g.var("actor:" + key.str()), d);
    }
  }
  for (const auto& id : anchor_ids) {
    const auto& doc = corpus.document(id);
    if (doc.label == Label::Unknown) continue;
    g.problem.anchors.emplace_back(g.var("doc:" + id), doc.label == Label::True ? 1.0 : 0.0);
  }
  return g;
}

inline void PublisherCredibilityModel::refine_with_softlogic(const Corpus& corpus,
                                                             std::span<const std::string> anchor_ids,
                                                             const SoftLogicHyper& hyper) {
  auto graph = build_credibility_graph(corpus, anchor_ids);
  auto res = softlogic_refine(graph.problem, hyper);
  refined_.emplace();
  for (const auto& p : corpus.publishers()) {
    auto it = graph.index.find("publisher:" + p.publisher_id);
    if (it != graph.index.end()) (*refined_)[p.publisher_id] = 1.0 - res.values[it->second];
  }
}

// ---------------------------------------------------------------------------

inline std::unique_ptr<Detector> detector_from_json(const nlohmann::json& j, const AffectLexicon* lexicon = nullptr) {
  auto type = j.at("type").get<std::string>();
  if (type == "affectflow") return AffectFlowModel::from_json(j, lexicon);
  if (type == "pc") return PublisherCredibilityModel::from_json(j);
  if (type == "uc") return UserCredibilityModel::from_json(j);
  throw DataError("unknown model type '" + type + "'");
}

}  // namespace veracity
