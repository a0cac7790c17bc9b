#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "veracity/aggregator.hpp"
#include "veracity/base_models.hpp"
#include "veracity/features.hpp"

namespace veracity {

struct ExplanationTier1 {
  std::string verdict;
  double prob = 0.5;
  std::optional<std::string> top_model;
  bool insufficient_evidence = false;

  bool operator==(const ExplanationTier1&) const = default;
};

struct ModelContribution {
  std::string model_id;
  double p = 0.5;
  double r = 0.0;
  std::optional<double> contribution;

  bool operator==(const ModelContribution&) const = default;
};

struct FactorDetail {
  FactorId factor = FactorId::WordCount;
  double value = 0.0;
  std::size_t bin = 0;
  double bin_low = 0.0;
  double bin_high = 0.0;
  double bin_reliability = 0.0;

  bool operator==(const FactorDetail&) const = default;
};

struct ModelDetail {
  std::string model_id;
  std::vector<FactorDetail> factors;
  std::vector<Attribution> attributions;

  bool operator==(const ModelDetail&) const = default;
};

/// Three tiers of increasing depth: verdict, per-model weights, per-model
/// factor readings and feature attributions.
struct Explanation {
  std::string doc_id;
  Timestamp t = 0;
  ExplanationTier1 tier1;
  std::vector<ModelContribution> tier2;
  std::vector<ModelDetail> tier3;

  bool operator==(const Explanation&) const = default;
};

/// Explains a verdict from exactly the outputs it was aggregated from.
/// Throws DataError when the outputs do not reproduce the verdict.
inline Explanation explain(const AggregatedVerdict& verdict, std::span<const WeightedOutput> outputs,
                           const CurveSet& curves, const std::map<std::string, const Detector*>& models,
                           const Snapshot& snapshot, const Corpus& corpus, double threshold = 0.5,
                           std::size_t top_attributions = 5) {
  auto check = aggregate(outputs);
  if (check.insufficient_evidence != verdict.insufficient_evidence || std::abs(check.prob - verdict.prob) > 1e-9) {
    throw DataError("explain: outputs do not reproduce the verdict");
  }

  Explanation ex;
  ex.doc_id = verdict.doc_id;
  ex.t = verdict.t;
  ex.tier1.prob = verdict.prob;
  ex.tier1.verdict = std::string(to_string(decide(verdict.prob, threshold)));
  ex.tier1.insufficient_evidence = verdict.insufficient_evidence;

  for (std::size_t i = 0; i < outputs.size(); ++i) {
    ModelContribution mc{outputs[i].model_id, outputs[i].p, outputs[i].r, std::nullopt};
    if (!verdict.insufficient_evidence) mc.contribution = verdict.contributions[i].second;
    ex.tier2.push_back(mc);
  }
  if (!verdict.insufficient_evidence) {
    const ModelContribution* top = nullptr;
    for (const auto& mc : ex.tier2) {
      if (top == nullptr || *mc.contribution > *top->contribution ||
          (*mc.contribution == *top->contribution && mc.model_id < top->model_id)) {
        top = &mc;
      }
    }
    ex.tier1.top_model = top->model_id;
  }

  for (const auto& o : outputs) {
    ModelDetail md{o.model_id, {}, {}};
    auto it = models.find(o.model_id);
    const Detector* model = it == models.end() ? nullptr : it->second;
    if (model != nullptr) {
      for (auto f : model->required_factors()) {
        const auto& curve = curves.at(o.model_id, f);
        double value = find_reading(o.readings, f);
        std::size_t b = curve.bin_of(value);
        md.factors.push_back({f, value, b, curve.bin_edges[b], curve.bin_edges[b + 1], curve.bin_reliability[b]});
      }
      md.attributions = model->attributions(snapshot, corpus, top_attributions);
    }
    ex.tier3.push_back(std::move(md));
  }
  return ex;
}

inline nlohmann::json explanation_to_json(const Explanation& ex) {
  nlohmann::json t1 = {{"verdict", ex.tier1.verdict},
                       {"prob", ex.tier1.prob},
                       {"insufficient_evidence", ex.tier1.insufficient_evidence}};
  t1["top_model"] = ex.tier1.top_model ? nlohmann::json(*ex.tier1.top_model) : nlohmann::json(nullptr);

  nlohmann::json t2 = nlohmann::json::array();
  for (const auto& mc : ex.tier2) {
    nlohmann::json j = {{"model_id", mc.model_id}, {"p", mc.p}, {"r", mc.r}};
    j["contribution"] = mc.contribution ? nlohmann::json(*mc.contribution) : nlohmann::json(nullptr);
    t2.push_back(std::move(j));
  }

  nlohmann::json t3 = nlohmann::json::array();
  for (const auto& md : ex.tier3) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : md.factors) {
      factors.push_back({{"factor_id", to_string(f.factor)},
                         {"value", f.value},
                         {"bin", f.bin},
                         {"bin_low", f.bin_low},
                         {"bin_high", f.bin_high},
                         {"bin_reliability", f.bin_reliability}});
    }
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : md.attributions) attrs.push_back({{"feature", a.feature}, {"value", a.value}});
    t3.push_back({{"model_id", md.model_id}, {"factors", std::move(factors)}, {"attributions", std::move(attrs)}});
  }

  return {{"format", "veracity-explanation"}, {"version", 1}, {"doc_id", ex.doc_id}, {"t", ex.t},
          {"tier1", std::move(t1)},           {"tier2", std::move(t2)}, {"tier3", std::move(t3)}};
}

inline Explanation explanation_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "veracity-explanation") throw DataError("not an explanation record");
  Explanation ex;
  ex.doc_id = j.at("doc_id").get<std::string>();
  ex.t = j.at("t").get<Timestamp>();
  const auto& t1 = j.at("tier1");
  ex.tier1.verdict = t1.at("verdict").get<std::string>();
  ex.tier1.prob = t1.at("prob").get<double>();
  ex.tier1.insufficient_evidence = t1.at("insufficient_evidence").get<bool>();
  if (!t1.at("top_model").is_null()) ex.tier1.top_model = t1.at("top_model").get<std::string>();
  for (const auto& m : j.at("tier2")) {
    ModelContribution mc{m.at("model_id").get<std::string>(), m.at("p").get<double>(), m.at("r").get<double>(),
                         std::nullopt};
    if (!m.at("contribution").is_null()) mc.contribution = m.at("contribution").get<double>();
    ex.tier2.push_back(mc);
  }
  for (const auto& m : j.at("tier3")) {
    ModelDetail md{m.at("model_id").get<std::string>(), {}, {}};
    for (const auto& f : m.at("factors")) {
      md.factors.push_back({factor_from_string(f.at("factor_id").get<std::string>()), f.at("value").get<double>(),
                            f.at("bin").get<std::size_t>(), f.at("bin_low").get<double>(),
                            f.at("bin_high").get<double>(), f.at("bin_reliability").get<double>()});
    }
    for (const auto& a : m.at("attributions")) {
      md.attributions.push_back({a.at("feature").get<std::string>(), a.at("value").get<double>()});
    }
    ex.tier3.push_back(std::move(md));
  }
  return ex;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string fmt_signed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.6f", v);
  return buf;
}

}  // namespace detail

/// Plain-text rendering, tiers in order 1, 2, 3.
inline std::string explanation_to_text(const Explanation& ex) {
  std::string out = "veracity-explanation v1\n";
  out += "document " + ex.doc_id + " at t=" + std::to_string(ex.t) + "\n";
  out += "[tier 1] verdict=" + ex.tier1.verdict + " prob=" + detail::fmt_num(ex.tier1.prob);
  if (ex.tier1.insufficient_evidence) {
    out += " insufficient_evidence\n";
  } else {
    out += " top_model=" + ex.tier1.top_model.value_or("") + "\n";
  }
  out += "[tier 2]\n";
  for (const auto& mc : ex.tier2) {
    out += "  " + mc.model_id + " p=" + detail::fmt_num(mc.p) + " r=" + detail::fmt_num(mc.r) + " contribution=" +
           (mc.contribution ? detail::fmt_num(*mc.contribution) : std::string("n/a")) + "\n";
  }
  out += "[tier 3]\n";
  for (const auto& md : ex.tier3) {
    out += "  " + md.model_id + "\n";
    for (const auto& f : md.factors) {
      out += "    factor " + std::string(to_string(f.factor)) + "=" + detail::fmt_num(f.value) + " bin=" +
             std::to_string(f.bin) + " [" + detail::fmt_num(f.bin_low) + ", " + detail::fmt_num(f.bin_high) +
             ") reliability=" + detail::fmt_num(f.bin_reliability) + "\n";
    }
    for (const auto& a : md.attributions) out += "    attribution " + a.feature + " " + detail::fmt_signed(a.value) + "\n";
  }
  return out;
}

enum class RenderFormat { Json, Text };

inline RenderFormat render_format_from_string(std::string_view s) {
  if (s == "json") return RenderFormat::Json;
  if (s == "text") return RenderFormat::Text;
  throw UsageError("unknown render format '" + std::string(s) + "'");
}

inline std::string render(const Explanation& ex, RenderFormat format) {
  return format == RenderFormat::Json ? explanation_to_json(ex).dump(2) + "\n" : explanation_to_text(ex);
}

inline std::string render(const Explanation& ex, std::string_view format) {
  return render(ex, render_format_from_string(format));
}

}  // namespace veracity
