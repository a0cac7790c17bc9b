#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "veracity/aggregator.hpp"
#include "veracity/base_models.hpp"
#include "veracity/crossplatform.hpp"
#include "veracity/intent.hpp"
#include "veracity/synthetic.hpp"

namespace veracity {

enum class PcMode { ClosedForm, SoftLogic };

/// Everything the pipeline and the CLI read from a config file. The file is
/// a JSON object; every key is optional and unknown keys are rejected.
struct PipelineConfig {
  std::vector<std::string> models{"affectflow", "pc", "uc"};
  /// Factors calibrated per model. Required factors not listed here get a
  /// constant 1.0 curve.
  std::map<std::string, std::vector<FactorId>> calibrated_factors{
      {"affectflow", {FactorId::WordCount}},
      {"pc", {}},
      {"uc", {FactorId::EngagementCount, FactorId::UserHistoryDepth}}};
  CalibrationOptions calibration;
  CombineMode combine = CombineMode::Min;
  double threshold = 0.5;
  /// Snapshot offsets after publish time used for calibration and evaluation.
  std::vector<Timestamp> horizons{2 * kHour, 24 * kHour, 168 * kHour};
  std::size_t folds = 10;

  BetaPrior prior;
  PcMode pc_mode = PcMode::ClosedForm;
  SoftLogicHyper softlogic;
  AffectFlowHyper affectflow;
  std::string lexicon_path;  // empty: bundled lexicon

  CoordinationOptions coordination;
  ContrastiveHyper intent;
  LinkThresholds linking;
  SynthConfig synthetic;

  void validate() const {
    if (models.empty()) throw UsageError("config: at least one model must be enabled");
    std::set<std::string> seen;
    for (const auto& m : models) {
      if (m != "affectflow" && m != "pc" && m != "uc") throw UsageError("config: unknown model '" + m + "'");
      if (!seen.insert(m).second) throw UsageError("config: model '" + m + "' listed twice");
    }
    for (const auto& [m, fs] : calibrated_factors) {
      if (m != "affectflow" && m != "pc" && m != "uc") throw UsageError("config: factors for unknown model '" + m + "'");
    }
    if (calibration.bins == 0) throw UsageError("config: bins must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("config: threshold must lie in (0,1)");
    if (horizons.empty()) throw UsageError("config: horizons must not be empty");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      if (horizons[i] < 0) throw UsageError("config: horizons must be non-negative");
      if (i > 0 && horizons[i] <= horizons[i - 1]) throw UsageError("config: horizons must ascend");
    }
    if (folds < 2) throw UsageError("config: folds must be at least 2");
    if (affectflow.segments == 0) throw UsageError("config: affectflow segments must be positive");
    if (coordination.window <= 0) throw UsageError("config: coordination window must be positive");
    if (coordination.n_shuffles < 100) throw UsageError("config: n_shuffles must be at least 100");
    if (intent.dim == 0) throw UsageError("config: intent dim must be positive");
    synthetic.validate();
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw UsageError("config: '" + where + "' must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) throw UsageError("config: unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::vector<FactorId> factor_list(const nlohmann::json& j) {
  std::vector<FactorId> out;
  for (const auto& f : j) {
    try {
      out.push_back(factor_from_string(f.get<std::string>()));
    } catch (const DataError& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }
  return out;
}

}  // namespace detail

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  using detail::read_opt;
  PipelineConfig c;
  try {
    detail::reject_unknown(j,
                           {"models", "calibrated_factors", "bins", "min_support", "isotonic", "combine", "threshold",
                            "horizons_hours", "folds", "prior", "pc_mode", "softlogic", "affectflow", "lexicon",
                            "coordination", "intent", "linking", "synthetic"},
                           "config");
    read_opt(j, "models", c.models);
    if (j.contains("calibrated_factors")) {
      for (const auto& [m, fs] : j.at("calibrated_factors").items()) c.calibrated_factors[m] = detail::factor_list(fs);
    }
    read_opt(j, "bins", c.calibration.bins);
    read_opt(j, "min_support", c.calibration.min_support);
    read_opt(j, "isotonic", c.calibration.isotonic);
    if (j.contains("combine")) c.combine = combine_mode_from_string(j.at("combine").get<std::string>());
    read_opt(j, "threshold", c.threshold);
    c.calibration.threshold = c.threshold;
    if (j.contains("horizons_hours")) {
      c.horizons.clear();
      for (const auto& h : j.at("horizons_hours")) c.horizons.push_back(static_cast<Timestamp>(h.get<double>() * kHour));
    }
    read_opt(j, "folds", c.folds);
    if (j.contains("prior")) {
      const auto& p = j.at("prior");
      c.prior = {p.at(0).get<double>(), p.at(1).get<double>()};
      if (!(c.prior.a > 0.0 && c.prior.b > 0.0)) throw UsageError("config: prior must be positive");
    }
    if (j.contains("pc_mode")) {
      auto m = j.at("pc_mode").get<std::string>();
      if (m == "closed_form") {
        c.pc_mode = PcMode::ClosedForm;
      } else if (m == "softlogic") {
        c.pc_mode = PcMode::SoftLogic;
      } else {
        throw UsageError("config: unknown pc_mode '" + m + "'");
      }
    }
    if (j.contains("softlogic")) {
      const auto& s = j.at("softlogic");
      detail::reject_unknown(s, {"step", "iters"}, "softlogic");
      read_opt(s, "step", c.softlogic.step);
      read_opt(s, "iters", c.softlogic.iters);
    }
    if (j.contains("affectflow")) {
      const auto& a = j.at("affectflow");
      detail::reject_unknown(a, {"learning_rate", "epochs", "l2", "seed", "segments"}, "affectflow");
      read_opt(a, "learning_rate", c.affectflow.learning_rate);
      read_opt(a, "epochs", c.affectflow.epochs);
      read_opt(a, "l2", c.affectflow.l2);
      read_opt(a, "seed", c.affectflow.seed);
      read_opt(a, "segments", c.affectflow.segments);
    }
    read_opt(j, "lexicon", c.lexicon_path);
    if (j.contains("coordination")) {
      const auto& o = j.at("coordination");
      detail::reject_unknown(o, {"window_seconds", "percentiles", "persistence", "n_shuffles", "seed",
                                 "community_seed", "near_duplicate"},
                             "coordination");
      read_opt(o, "window_seconds", c.coordination.window);
      read_opt(o, "percentiles", c.coordination.communities.percentiles);
      read_opt(o, "persistence", c.coordination.communities.persistence);
      read_opt(o, "n_shuffles", c.coordination.n_shuffles);
      read_opt(o, "seed", c.coordination.seed);
      read_opt(o, "community_seed", c.coordination.communities.seed);
      read_opt(o, "near_duplicate", c.coordination.traces.shingle_threshold);
    }
    if (j.contains("intent")) {
      const auto& o = j.at("intent");
      detail::reject_unknown(o, {"margin", "rate", "epochs", "dim", "seed"}, "intent");
      read_opt(o, "margin", c.intent.margin);
      read_opt(o, "rate", c.intent.rate);
      read_opt(o, "epochs", c.intent.epochs);
      read_opt(o, "dim", c.intent.dim);
      read_opt(o, "seed", c.intent.seed);
    }
    if (j.contains("linking")) {
      const auto& o = j.at("linking");
      detail::reject_unknown(o, {"name_similarity", "min_shared_rare_urls", "rare_idf"}, "linking");
      read_opt(o, "name_similarity", c.linking.name_similarity);
      read_opt(o, "min_shared_rare_urls", c.linking.min_shared_rare_urls);
      read_opt(o, "rare_idf", c.linking.rare_idf);
    }
    if (j.contains("synthetic")) {
      const auto& o = j.at("synthetic");
      detail::reject_unknown(o,
                             {"n_docs", "n_publishers", "platforms", "actors_per_platform", "affect_rate",
                              "affect_bias", "short_doc_tokens", "short_label_noise", "publisher_bias",
                              "mean_engagements", "engagement_spread", "homophily", "unknown_history_rate",
                              "span_days", "horizon_days", "clusters", "coordination_window", "alias_pairs"},
                             "synthetic");
      auto& s = c.synthetic;
      read_opt(o, "n_docs", s.n_docs);
      read_opt(o, "n_publishers", s.n_publishers);
      read_opt(o, "platforms", s.platforms);
      read_opt(o, "actors_per_platform", s.actors_per_platform);
      read_opt(o, "affect_rate", s.affect_rate);
      read_opt(o, "affect_bias", s.affect_bias);
      read_opt(o, "short_doc_tokens", s.short_doc_tokens);
      read_opt(o, "short_label_noise", s.short_label_noise);
      read_opt(o, "publisher_bias", s.publisher_bias);
      read_opt(o, "mean_engagements", s.mean_engagements);
      read_opt(o, "engagement_spread", s.engagement_spread);
      read_opt(o, "homophily", s.homophily);
      read_opt(o, "unknown_history_rate", s.unknown_history_rate);
      if (o.contains("span_days")) s.span = static_cast<Timestamp>(o.at("span_days").get<double>() * kDay);
      if (o.contains("horizon_days")) s.horizon = static_cast<Timestamp>(o.at("horizon_days").get<double>() * kDay);
      read_opt(o, "coordination_window", s.coordination_window);
      read_opt(o, "alias_pairs", s.alias_pairs);
      if (o.contains("clusters")) {
        s.clusters.clear();
        for (const auto& cl : o.at("clusters")) {
          detail::reject_unknown(cl, {"size", "intent", "platform", "bursts"}, "synthetic.clusters");
          ClusterSpec spec;
          read_opt(cl, "size", spec.size);
          if (cl.contains("intent")) spec.intent = intent_from_string(cl.at("intent").get<std::string>());
          read_opt(cl, "platform", spec.platform);
          read_opt(cl, "bursts", spec.bursts);
          s.clusters.push_back(spec);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const DataError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

/// The model-relevant subset of the config, stored with a trained pipeline.
inline nlohmann::json pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::json factors = nlohmann::json::object();
  for (const auto& [m, fs] : c.calibrated_factors) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto f : fs) arr.push_back(to_string(f));
    factors[m] = std::move(arr);
  }
  std::vector<double> hours;
  for (auto h : c.horizons) hours.push_back(static_cast<double>(h) / kHour);
  return {{"models", c.models},
          {"calibrated_factors", std::move(factors)},
          {"bins", c.calibration.bins},
          {"min_support", c.calibration.min_support},
          {"isotonic", c.calibration.isotonic},
          {"combine", to_string(c.combine)},
          {"threshold", c.threshold},
          {"horizons_hours", hours},
          {"folds", c.folds},
          {"prior", {c.prior.a, c.prior.b}},
          {"pc_mode", c.pc_mode == PcMode::SoftLogic ? "softlogic" : "closed_form"},
          {"softlogic", {{"step", c.softlogic.step}, {"iters", c.softlogic.iters}}},
          {"affectflow",
           {{"learning_rate", c.affectflow.learning_rate},
            {"epochs", c.affectflow.epochs},
            {"l2", c.affectflow.l2},
            {"seed", c.affectflow.seed},
            {"segments", c.affectflow.segments}}},
          {"lexicon", c.lexicon_path}};
}

}  // namespace veracity
