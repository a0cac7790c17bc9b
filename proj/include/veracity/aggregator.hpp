#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "veracity/base_models.hpp"
#include "veracity/common.hpp"
#include "veracity/corpus.hpp"
#include "veracity/features.hpp"
#include "veracity/metrics.hpp"

namespace veracity {

/// Pool-adjacent-violators fit of a non-decreasing sequence (weighted least squares).
inline std::vector<double> isotonic_fit(std::span<const double> values, std::span<const double> weights) {
  struct Block {
    double sum;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double w = weights.empty() ? 1.0 : weights[i];
    if (w <= 0.0) w = 1e-12;
    blocks.push_back({values[i] * w, w, 1});
    while (blocks.size() > 1) {
      auto& b = blocks[blocks.size() - 1];
      auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.weight <= b.sum / b.weight) break;
      a.sum += b.sum;
      a.weight += b.weight;
      a.count += b.count;
      blocks.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.weight);
  return out;
}

/// Equal-frequency bin edges over the observed values, deduplicated. A single
/// distinct value v yields edges {v, v + 1}.
inline std::vector<double> equal_frequency_edges(std::vector<double> values, std::size_t bins) {
  if (values.empty()) throw DataError("cannot bin an empty sample");
  if (bins == 0) throw UsageError("bin count must be positive");
  std::sort(values.begin(), values.end());
  std::vector<double> edges{values.front()};
  for (std::size_t i = 1; i < bins; ++i) {
    double e = values[i * values.size() / bins];
    if (e > edges.back()) edges.push_back(e);
  }
  // When the maximum already opened the last bin, close that bin one unit later.
  edges.push_back(values.back() > edges.back() ? values.back() : values.back() + 1.0);
  return edges;
}

/// Bin i covers [edges[i], edges[i+1]); the last bin also holds its right
/// edge. Out-of-range values clamp to the end bins.
inline std::size_t bin_index(std::span<const double> edges, double x) {
  const std::size_t nbins = edges.size() - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), x);
  std::size_t pos = static_cast<std::size_t>(it - edges.begin());
  if (pos == 0) return 0;
  return std::min(pos - 1, nbins - 1);
}

struct CalibrationCurve {
  FactorId factor = FactorId::WordCount;
  std::vector<double> bin_edges;
  std::vector<double> bin_reliability;
  std::vector<std::size_t> bin_support;
  std::size_t min_support = 0;
  bool smoothed = false;

  static CalibrationCurve constant(FactorId f, double value = 1.0) {
    return {f, {0.0, 1.0}, {value}, {0}, 0, false};
  }

  std::size_t bin_of(double x) const { return bin_index(bin_edges, x); }
  double evaluate(double x) const { return bin_reliability[bin_of(x)]; }

  bool operator==(const CalibrationCurve&) const = default;

  nlohmann::json to_json() const {
    return {{"factor_id", to_string(factor)}, {"edges", bin_edges},        {"values", bin_reliability},
            {"support", bin_support},         {"min_support", min_support}, {"smoothed", smoothed}};
  }

  static CalibrationCurve from_json(const nlohmann::json& j) {
    CalibrationCurve c;
    c.factor = factor_from_string(j.at("factor_id").get<std::string>());
    c.bin_edges = j.at("edges").get<std::vector<double>>();
    c.bin_reliability = j.at("values").get<std::vector<double>>();
    c.bin_support = j.value("support", std::vector<std::size_t>(c.bin_reliability.size(), 0));
    c.min_support = j.value("min_support", std::size_t{0});
    c.smoothed = j.value("smoothed", false);
    c.validate();
    return c;
  }

  void validate() const {
    if (bin_edges.size() < 2 || bin_reliability.size() != bin_edges.size() - 1) {
      throw DataError("calibration curve: need |values| = |edges| - 1 >= 1");
    }
    for (std::size_t i = 1; i < bin_edges.size(); ++i) {
      if (!(bin_edges[i] > bin_edges[i - 1])) throw DataError("calibration curve: edges must ascend");
    }
    for (double v : bin_reliability) {
      if (!(v >= 0.0 && v <= 1.0)) throw DataError("calibration curve: values must lie in [0,1]");
    }
  }
};

struct CalibrationOptions {
  std::size_t bins = 10;
  std::size_t min_support = 20;
  bool isotonic = true;
  double threshold = 0.5;
};

/// (factor value, predicted p, label) for one validation snapshot.
struct CalibrationPoint {
  double factor_value = 0.0;
  double p = 0.5;
  Label label = Label::Unknown;
};

/// Bins points by factor value and records per-bin F1 of the thresholded
/// predictions. Under-supported bins inherit the nearest supported bin
/// (ties to the lower bin); isotonic smoothing runs over supported bins.
inline CalibrationCurve calibrate_points(std::span<const CalibrationPoint> points, FactorId factor,
                                         const CalibrationOptions& opt) {
  std::vector<CalibrationPoint> labeled;
  for (const auto& p : points) {
    if (p.label != Label::Unknown) labeled.push_back(p);
  }
  if (labeled.empty()) throw DataError("calibrate: validation split has no labelled snapshots");

  std::vector<double> values;
  for (const auto& p : labeled) values.push_back(p.factor_value);
  CalibrationCurve curve;
  curve.factor = factor;
  curve.min_support = opt.min_support;
  curve.bin_edges = equal_frequency_edges(values, opt.bins);
  const std::size_t nbins = curve.bin_edges.size() - 1;

  std::vector<Confusion> conf(nbins);
  curve.bin_support.assign(nbins, 0);
  for (const auto& p : labeled) {
    std::size_t b = curve.bin_of(p.factor_value);
    conf[b].add(p.p >= opt.threshold, p.label == Label::False);
    ++curve.bin_support[b];
  }

  std::vector<std::size_t> supported;
  for (std::size_t b = 0; b < nbins; ++b) {
    if (curve.bin_support[b] >= std::max<std::size_t>(opt.min_support, 1)) supported.push_back(b);
  }
  if (supported.empty()) throw DataError("calibrate: every bin is under-supported");

  std::vector<double> f1, weight;
  for (std::size_t b : supported) {
    f1.push_back(metrics_from_confusion(conf[b]).f1);
    weight.push_back(static_cast<double>(curve.bin_support[b]));
  }
  if (opt.isotonic) {
    f1 = isotonic_fit(f1, weight);
    curve.smoothed = true;
  }

  curve.bin_reliability.assign(nbins, 0.0);
  for (std::size_t b = 0; b < nbins; ++b) {
    std::size_t best = 0;
    std::size_t best_dist = static_cast<std::size_t>(-1);
    for (std::size_t k = 0; k < supported.size(); ++k) {
      std::size_t dist = supported[k] > b ? supported[k] - b : b - supported[k];
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    curve.bin_reliability[b] = std::clamp(f1[best], 0.0, 1.0);
  }
  return curve;
}

/// Calibrates one model on one factor over labelled validation snapshots.
inline CalibrationCurve calibrate(const Detector& model, const Corpus& corpus, std::span<const Snapshot> validation,
                                  FactorId factor, const CalibrationOptions& opt) {
  if (validation.empty()) throw DataError("calibrate: empty validation split");
  std::vector<CalibrationPoint> points;
  for (const auto& s : validation) {
    points.push_back({reading_value(factor, s, corpus), model.predict(s, corpus).p, corpus.document(s.doc_id).label});
  }
  return calibrate_points(points, factor, opt);
}

/// Curves keyed by (model id, factor).
class CurveSet {
 public:
  void set(const std::string& model_id, CalibrationCurve curve) {
    curves_[{model_id, curve.factor}] = std::move(curve);
  }

  const CalibrationCurve* find(const std::string& model_id, FactorId f) const {
    auto it = curves_.find({model_id, f});
    return it == curves_.end() ? nullptr : &it->second;
  }

  const CalibrationCurve& at(const std::string& model_id, FactorId f) const {
    const auto* c = find(model_id, f);
    if (c == nullptr) {
      throw DataError("no calibration curve for model '" + model_id + "' factor '" + std::string(to_string(f)) + "'");
    }
    return *c;
  }

  bool operator==(const CurveSet&) const = default;

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [key, c] : curves_) {
      auto j = c.to_json();
      j["model_id"] = key.first;
      arr.push_back(std::move(j));
    }
    return {{"format", "veracity-curves"}, {"version", 1}, {"curves", std::move(arr)}};
  }

  static CurveSet from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "veracity-curves") throw DataError("not a curves file");
    CurveSet s;
    for (const auto& c : j.at("curves")) s.set(c.at("model_id").get<std::string>(), CalibrationCurve::from_json(c));
    return s;
  }

 private:
  std::map<std::pair<std::string, FactorId>, CalibrationCurve> curves_;
};

enum class CombineMode { Min, Product, Mean };

inline std::string_view to_string(CombineMode m) {
  switch (m) {
    case CombineMode::Min: return "min";
    case CombineMode::Product: return "product";
    case CombineMode::Mean: return "mean";
  }
  return "min";
}

inline CombineMode combine_mode_from_string(std::string_view s) {
  if (s == "min") return CombineMode::Min;
  if (s == "product") return CombineMode::Product;
  if (s == "mean") return CombineMode::Mean;
  throw UsageError("unknown combine mode '" + std::string(s) + "'");
}

/// Evaluates the model's curves at the snapshot readings and combines them
/// (minimum by default). Out-of-range readings clamp to the end bins.
inline double reliability(const std::string& model_id, std::span<const FactorId> factors,
                          std::span<const FactorReading> readings, const CurveSet& curves,
                          CombineMode mode = CombineMode::Min) {
  if (factors.empty()) return 1.0;
  double r = mode == CombineMode::Min ? 1.0 : (mode == CombineMode::Product ? 1.0 : 0.0);
  for (auto f : factors) {
    double v = curves.at(model_id, f).evaluate(find_reading(readings, f));
    switch (mode) {
      case CombineMode::Min: r = std::min(r, v); break;
      case CombineMode::Product: r *= v; break;
      case CombineMode::Mean: r += v / static_cast<double>(factors.size()); break;
    }
  }
  return std::clamp(r, 0.0, 1.0);
}

struct WeightedOutput {
  std::string model_id;
  double p = 0.5;
  double r = 1.0;
  std::vector<FactorReading> readings;
};

struct AggregatedVerdict {
  std::string doc_id;
  Timestamp t = 0;
  double prob = 0.5;
  /// Normalized weights in output order; empty when insufficient_evidence.
  std::vector<std::pair<std::string, double>> contributions;
  bool insufficient_evidence = false;

  double contribution_of(const std::string& model_id) const {
    for (const auto& [m, c] : contributions) {
      if (m == model_id) return c;
    }
    return 0.0;
  }
};

/// Prob = sum(r p) / sum(r); falls back to 0.5 with the insufficient-evidence
/// flag when every r is zero.
inline AggregatedVerdict aggregate(std::span<const WeightedOutput> outputs, std::string doc_id = {}, Timestamp t = 0) {
  if (outputs.empty()) throw DataError("aggregate: no model outputs");
  double total = 0.0, weighted = 0.0;
  double lo = 1.0, hi = 0.0;
  for (const auto& o : outputs) {
    if (!(o.p >= 0.0 && o.p <= 1.0)) throw DataError("aggregate: p outside [0,1] for '" + o.model_id + "'");
    if (!(o.r >= 0.0 && o.r <= 1.0)) throw DataError("aggregate: r outside [0,1] for '" + o.model_id + "'");
    total += o.r;
    weighted += o.r * o.p;
    if (o.r > 0.0) {
      lo = std::min(lo, o.p);
      hi = std::max(hi, o.p);
    }
  }
  AggregatedVerdict v{std::move(doc_id), t, 0.5, {}, false};
  if (total <= 0.0) {
    v.insufficient_evidence = true;
    return v;
  }
  // Rounding can push the ratio a few ulps outside the hull of the inputs.
  v.prob = std::clamp(weighted / total, lo, hi);
  for (const auto& o : outputs) v.contributions.emplace_back(o.model_id, o.r / total);
  return v;
}

enum class Decision { FalseNews, TrueNews };

inline std::string_view to_string(Decision d) { return d == Decision::FalseNews ? "false_news" : "true_news"; }

inline Decision decide(double prob, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("decision threshold must lie in (0,1)");
  return prob >= threshold ? Decision::FalseNews : Decision::TrueNews;
}

}  // namespace veracity
