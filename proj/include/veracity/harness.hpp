#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "veracity/aggregator.hpp"
#include "veracity/base_models.hpp"
#include "veracity/config.hpp"
#include "veracity/explainer.hpp"
#include "veracity/metrics.hpp"

namespace veracity {

// ---------------------------------------------------------------------------
// Folds

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  bool operator==(const Fold&) const = default;
};

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;

  bool operator==(const FoldPlan&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : folds) arr.push_back({{"train", f.train}, {"validation", f.validation}, {"test", f.test}});
    return {{"format", "veracity-folds"}, {"version", 1}, {"k", k}, {"seed", seed}, {"folds", std::move(arr)}};
  }
};

/// Stratified k-fold plan with 70/10/20 train/validation/test per fold.
///
/// Each label stratum is shuffled with the seed and the strata are
/// interleaved by relative rank, so any contiguous window of the order holds
/// every class in proportion. Fold i rotates the order by floor(i*n/k) and
/// cuts it at round(0.7n) and round(0.8n).
inline FoldPlan split_folds(const Corpus& corpus, std::size_t k = 10, std::uint64_t seed = 0) {
  if (k < 2) throw UsageError("split_folds: k must be at least 2");
  std::map<Label, std::vector<std::string>> strata;
  std::size_t labeled = 0;
  for (const auto& d : corpus.documents()) {
    strata[d.label].push_back(d.doc_id);
    if (d.label != Label::Unknown) ++labeled;
  }
  if (labeled < k) {
    throw DataError("split_folds: " + std::to_string(labeled) + " labelled documents, need at least " +
                    std::to_string(k));
  }

  std::mt19937_64 rng(seed);
  struct Keyed {
    double key;
    int stratum;
    std::string id;
  };
  std::vector<Keyed> keyed;
  for (auto& [label, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      keyed.push_back({(static_cast<double>(r) + 0.5) / static_cast<double>(ids.size()), static_cast<int>(label), ids[r]});
    }
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.stratum < b.stratum;
  });

  const std::size_t n = keyed.size();
  const auto cut_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(n)));
  const auto cut_val = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n)));
  FoldPlan plan{k, seed, {}};
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t shift = i * n / k;
    Fold f;
    for (std::size_t pos = 0; pos < n; ++pos) {
      const auto& id = keyed[(pos + shift) % n].id;
      (pos < cut_train ? f.train : (pos < cut_val ? f.validation : f.test)).push_back(id);
    }
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Metrics

struct Prediction {
  std::string doc_id;
  double prob = 0.5;
};

/// Thresholds predictions at tau (prob >= tau means false news).
inline MetricsReport evaluate(std::span<const Prediction> predictions,
                              const std::map<std::string, Label, std::less<>>& labels, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("evaluate: threshold must lie in (0,1)");
  Confusion c;
  for (const auto& p : predictions) {
    auto it = labels.find(p.doc_id);
    if (it == labels.end()) throw DataError("evaluate: unknown doc_id '" + p.doc_id + "'");
    if (it->second == Label::Unknown) throw DataError("evaluate: doc '" + p.doc_id + "' has no label");
    c.add(p.prob >= threshold, it->second == Label::False);
  }
  return metrics_from_confusion(c);
}

inline std::map<std::string, Label, std::less<>> corpus_labels(const Corpus& corpus) {
  std::map<std::string, Label, std::less<>> out;
  for (const auto& d : corpus.documents()) out[d.doc_id] = d.label;
  return out;
}

inline std::string metrics_csv_header() { return "precision,recall,f1,accuracy,tp,fp,tn,fn"; }

inline std::string metrics_csv_row(const MetricsReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%zu,%zu,%zu,%zu", m.precision, m.recall, m.f1, m.accuracy,
                m.confusion.tp, m.confusion.fp, m.confusion.tn, m.confusion.fn);
  return buf;
}

// ---------------------------------------------------------------------------
// Binned F1

struct BinRow {
  double low = 0.0;
  double high = 0.0;
  std::size_t support = 0;
  double f1 = 0.0;
  double f1_smoothed = 0.0;
  bool under_supported = false;
};

/// Equal-frequency bins over the factor value; one row per populated bin.
/// Smoothed F1 is the weighted isotonic fit over the supported rows; an
/// under-supported row copies the nearest supported row's smoothed value.
inline std::vector<BinRow> binned_f1(std::span<const CalibrationPoint> points, std::size_t bins,
                                     std::size_t min_support, double threshold = 0.5) {
  std::vector<CalibrationPoint> labeled;
  for (const auto& p : points) {
    if (p.label != Label::Unknown) labeled.push_back(p);
  }
  if (labeled.empty()) throw DataError("binned_f1: empty split");
  std::vector<double> values;
  for (const auto& p : labeled) values.push_back(p.factor_value);
  auto edges = equal_frequency_edges(values, bins);
  std::vector<Confusion> conf(edges.size() - 1);
  std::vector<std::size_t> support(edges.size() - 1, 0);
  for (const auto& p : labeled) {
    auto b = bin_index(edges, p.factor_value);
    conf[b].add(p.p >= threshold, p.label == Label::False);
    ++support[b];
  }
  std::vector<BinRow> rows;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    if (support[b] == 0) continue;
    rows.push_back({edges[b], edges[b + 1], support[b], metrics_from_confusion(conf[b]).f1, 0.0,
                    support[b] < std::max<std::size_t>(min_support, 1)});
  }
  std::vector<std::size_t> sup;
  std::vector<double> f1, w;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].under_supported) {
      sup.push_back(i);
      f1.push_back(rows[i].f1);
      w.push_back(static_cast<double>(rows[i].support));
    }
  }
  if (sup.empty()) {
    for (auto& r : rows) r.f1_smoothed = r.f1;
    return rows;
  }
  auto smooth = isotonic_fit(f1, w);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < sup.size(); ++k) {
      auto dist = [&](std::size_t s) { return s > i ? s - i : i - s; };
      if (dist(sup[k]) < dist(sup[best])) best = k;
    }
    rows[i].f1_smoothed = smooth[best];
  }
  return rows;
}

inline std::string binned_f1_csv(std::span<const BinRow> rows, FactorId factor) {
  std::ostringstream os;
  os << "factor,bin,low,high,support,f1,f1_smoothed,under_supported\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%zu,%.6f,%.6f,%d\n", std::string(to_string(factor)).c_str(), i,
                  rows[i].low, rows[i].high, rows[i].support, rows[i].f1, rows[i].f1_smoothed,
                  rows[i].under_supported ? 1 : 0);
    os << buf;
  }
  return os.str();
}

/// Binned F1 of one model over a labelled test split, one snapshot per doc
/// at publish_time + offset.
inline std::vector<BinRow> binned_f1_report(const Detector& model, const Corpus& corpus,
                                            std::span<const std::string> test_ids, FactorId factor, std::size_t bins,
                                            std::size_t min_support = 20, Timestamp offset = 0,
                                            double threshold = 0.5) {
  if (test_ids.empty()) throw DataError("binned_f1_report: empty split");
  std::vector<CalibrationPoint> points;
  for (const auto& id : test_ids) {
    const auto& doc = corpus.document(id);
    if (doc.label == Label::Unknown) continue;
    auto snap = corpus.snapshot_at(id, doc.publish_time + offset);
    points.push_back({reading_value(factor, snap, corpus), model.predict(snap, corpus).p, doc.label});
  }
  return binned_f1(points, bins, min_support, threshold);
}

// ---------------------------------------------------------------------------
// Pipeline

struct Detection {
  AggregatedVerdict verdict;
  std::vector<WeightedOutput> outputs;
  Explanation explanation;
};

/// Base models + calibration curves + aggregation + explanation.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config = {}) : config_(std::move(config)) {
    config_.validate();
    if (config_.lexicon_path.empty()) {
      lexicon_ = std::shared_ptr<const AffectLexicon>(&AffectLexicon::bundled(), [](const AffectLexicon*) {});
    } else {
      lexicon_ = std::make_shared<const AffectLexicon>(AffectLexicon::load(config_.lexicon_path));
    }
  }

  const PipelineConfig& config() const { return config_; }
  const CurveSet& curves() const { return curves_; }
  bool trained() const { return !models_.empty(); }
  bool calibrated() const { return calibrated_; }

  const Detector& model(const std::string& id) const {
    for (const auto& m : models_) {
      if (m->model_id() == id) return *m;
    }
    throw DataError("pipeline has no model '" + id + "'");
  }

  void train(const Corpus& corpus, std::span<const std::string> train_ids) {
    models_.clear();
    curves_ = {};
    calibrated_ = false;
    train_ids_ = std::set<std::string>(train_ids.begin(), train_ids.end());
    for (const auto& id : config_.models) {
      if (id == "affectflow") {
        models_.push_back(std::make_unique<AffectFlowModel>(config_.affectflow, lexicon_.get()));
        models_.back()->train(corpus, train_ids);
      } else if (id == "pc") {
        auto pc = std::make_unique<PublisherCredibilityModel>(config_.prior);
        pc->train(corpus, train_ids);
        if (config_.pc_mode == PcMode::SoftLogic) pc->refine_with_softlogic(corpus, train_ids, config_.softlogic);
        models_.push_back(std::move(pc));
      } else if (id == "uc") {
        models_.push_back(std::make_unique<UserCredibilityModel>(config_.prior));
        models_.back()->train(corpus, train_ids);
      }
    }
  }

  /// Fits curves on validation snapshots at every configured horizon.
  /// Throws std::logic_error if a validation doc was used for training.
  void calibrate(const Corpus& corpus, std::span<const std::string> validation_ids) {
    if (!trained()) throw UsageError("calibrate: pipeline is not trained");
    for (const auto& id : validation_ids) {
      if (train_ids_.contains(id)) throw std::logic_error("calibrate: validation doc '" + id + "' was trained on");
    }
    std::vector<Snapshot> snaps;
    for (const auto& id : validation_ids) {
      const auto& doc = corpus.document(id);
      if (doc.label == Label::Unknown) continue;
      for (auto h : config_.horizons) snaps.push_back(corpus.snapshot_at(id, doc.publish_time + h));
    }
    curves_ = {};
    for (const auto& m : models_) {
      const auto& listed = factors_for(m->model_id());
      for (auto f : m->required_factors()) {
        if (std::find(listed.begin(), listed.end(), f) != listed.end()) {
          curves_.set(m->model_id(), veracity::calibrate(*m, corpus, snaps, f, config_.calibration));
        } else {
          curves_.set(m->model_id(), CalibrationCurve::constant(f, 1.0));
        }
      }
    }
    calibrated_ = true;
  }

  std::vector<WeightedOutput> weighted_outputs(const Snapshot& snapshot, const Corpus& corpus) const {
    if (!calibrated_) throw UsageError("detect: pipeline is not calibrated");
    auto readings = factor_readings(snapshot, corpus);
    std::vector<WeightedOutput> out;
    for (const auto& m : models_) {
      auto o = m->predict(snapshot, corpus);
      auto factors = m->required_factors();
      double r = reliability(m->model_id(), factors, readings, curves_, config_.combine);
      out.push_back({o.model_id, o.p, r, readings});
    }
    return out;
  }

  Detection detect(const Snapshot& snapshot, const Corpus& corpus, std::size_t top_attributions = 5) const {
    Detection d;
    d.outputs = weighted_outputs(snapshot, corpus);
    d.verdict = aggregate(d.outputs, snapshot.doc_id, snapshot.t);
    std::map<std::string, const Detector*> by_id;
    for (const auto& m : models_) by_id[m->model_id()] = m.get();
    d.explanation =
        explain(d.verdict, d.outputs, curves_, by_id, snapshot, corpus, config_.threshold, top_attributions);
    return d;
  }

  nlohmann::json to_json() const {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : models_) models.push_back(m->to_json());
    return {{"format", "veracity-model"},
            {"version", 1},
            {"config", pipeline_config_to_json(config_)},
            {"lexicon_hash", hex64(lexicon_->hash())},
            {"train_ids", std::vector<std::string>(train_ids_.begin(), train_ids_.end())},
            {"models", std::move(models)},
            {"calibrated", calibrated_},
            {"curves", curves_.to_json()}};
  }

  static Pipeline from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "veracity-model") throw DataError("not a veracity model file");
    if (j.value("version", 0) != 1) throw DataError("unsupported model file version");
    PipelineConfig cfg;
    try {
      cfg = config_from_json(j.at("config"));
    } catch (const UsageError& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
    Pipeline p(cfg);
    if (j.at("lexicon_hash").get<std::string>() != hex64(p.lexicon_->hash())) {
      throw DataError("model file: lexicon hash mismatch");
    }
    auto ids = j.at("train_ids").get<std::vector<std::string>>();
    p.train_ids_ = std::set<std::string>(ids.begin(), ids.end());
    for (const auto& m : j.at("models")) p.models_.push_back(detector_from_json(m, p.lexicon_.get()));
    p.calibrated_ = j.at("calibrated").get<bool>();
    p.curves_ = CurveSet::from_json(j.at("curves"));
    return p;
  }

 private:
  const std::vector<FactorId>& factors_for(const std::string& model_id) const {
    static const std::vector<FactorId> none;
    auto it = config_.calibrated_factors.find(model_id);
    return it == config_.calibrated_factors.end() ? none : it->second;
  }

  PipelineConfig config_;
  std::shared_ptr<const AffectLexicon> lexicon_;
  std::vector<std::unique_ptr<Detector>> models_;
  std::set<std::string> train_ids_;
  CurveSet curves_;
  bool calibrated_ = false;
};

// ---------------------------------------------------------------------------
// Replay

struct ReplayStep {
  Timestamp t = 0;
  std::size_t engagement_count = 0;
  AggregatedVerdict verdict;
  Explanation explanation;
};

/// One detection per time; each uses only data timestamped <= t.
inline std::vector<ReplayStep> replay(const Corpus& corpus, const std::string& doc_id,
                                      std::span<const Timestamp> times, const Pipeline& pipeline) {
  if (corpus.find_document(doc_id) == nullptr) throw DataError("replay: unknown document '" + doc_id + "'");
  if (times.empty()) throw UsageError("replay: no times given");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) throw UsageError("replay: times must be in ascending order");
  }
  std::vector<ReplayStep> out;
  for (auto t : times) {
    auto snap = corpus.snapshot_at(doc_id, t);
    auto d = pipeline.detect(snap, corpus);
    out.push_back({t, snap.engagement_count(), std::move(d.verdict), std::move(d.explanation)});
  }
  return out;
}

inline nlohmann::json replay_to_json(std::span<const ReplayStep> steps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : steps) {
    arr.push_back({{"t", s.t}, {"engagement_count", s.engagement_count}, {"explanation", explanation_to_json(s.explanation)}});
  }
  return {{"format", "veracity-replay"}, {"version", 1}, {"steps", std::move(arr)}};
}

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldResult {
  std::size_t fold = 0;
  /// (model id or "ensemble", horizon) -> metrics on the test split.
  std::map<std::pair<std::string, Timestamp>, MetricsReport> metrics;
  /// (model id, factor) -> test points, pooled over horizons.
  std::map<std::pair<std::string, FactorId>, std::vector<CalibrationPoint>> points;
  CurveSet curves;
};

struct CrossValidationResult {
  FoldPlan plan;
  std::vector<FoldResult> folds;

  std::vector<CalibrationPoint> pooled(const std::string& model_id, FactorId f) const {
    std::vector<CalibrationPoint> out;
    for (const auto& fr : folds) {
      auto it = fr.points.find({model_id, f});
      if (it != fr.points.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
  }

  /// fold,model,horizon_hours,precision,... in fold/model/horizon order.
  std::string metrics_csv() const {
    std::ostringstream os;
    os << "fold,model,horizon_hours," << metrics_csv_header() << "\n";
    for (const auto& fr : folds) {
      for (const auto& [key, m] : fr.metrics) {
        os << fr.fold << "," << key.first << "," << key.second / kHour << "," << metrics_csv_row(m) << "\n";
      }
    }
    return os.str();
  }
};

inline void assert_disjoint(const Fold& f) {
  std::set<std::string> train(f.train.begin(), f.train.end());
  for (const auto& id : f.validation) {
    if (train.contains(id)) throw std::logic_error("fold leaks validation doc '" + id + "' into training");
  }
  for (const auto& id : f.test) {
    if (train.contains(id)) throw std::logic_error("fold leaks test doc '" + id + "' into training");
  }
}

inline FoldResult run_fold(const Corpus& corpus, const Fold& fold, std::size_t index, const PipelineConfig& config) {
  assert_disjoint(fold);
  Pipeline pipeline(config);
  pipeline.train(corpus, fold.train);
  pipeline.calibrate(corpus, fold.validation);

  FoldResult res;
  res.fold = index;
  res.curves = pipeline.curves();
  std::map<std::pair<std::string, Timestamp>, Confusion> conf;
  for (const auto& id : fold.test) {
    const auto& doc = corpus.document(id);
    if (doc.label == Label::Unknown) continue;
    const bool is_false = doc.label == Label::False;
    for (auto h : config.horizons) {
      auto snap = corpus.snapshot_at(id, doc.publish_time + h);
      auto outputs = pipeline.weighted_outputs(snap, corpus);
      auto verdict = aggregate(outputs, id, snap.t);
      conf[{"ensemble", h}].add(verdict.prob >= config.threshold, is_false);
      for (const auto& o : outputs) {
        conf[{o.model_id, h}].add(o.p >= config.threshold, is_false);
        for (auto f : pipeline.model(o.model_id).required_factors()) {
          res.points[{o.model_id, f}].push_back({find_reading(o.readings, f), o.p, doc.label});
        }
      }
    }
  }
  for (const auto& [key, c] : conf) res.metrics[key] = metrics_from_confusion(c);
  return res;
}

/// k-fold evaluation; folds run concurrently when `parallel` is set and are
/// assembled in fold order either way.
inline CrossValidationResult cross_validate(const Corpus& corpus, const PipelineConfig& config, std::uint64_t seed,
                                            bool parallel = true) {
  CrossValidationResult out;
  out.plan = split_folds(corpus, config.folds, seed);
  if (parallel) {
    std::vector<std::future<FoldResult>> jobs;
    for (std::size_t i = 0; i < out.plan.folds.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run_fold, std::cref(corpus), std::cref(out.plan.folds[i]), i,
                                std::cref(config)));
    }
    for (auto& j : jobs) out.folds.push_back(j.get());
  } else {
    for (std::size_t i = 0; i < out.plan.folds.size(); ++i) {
      out.folds.push_back(run_fold(corpus, out.plan.folds[i], i, config));
    }
  }
  return out;
}

}  // namespace veracity
