#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "veracity/harness.hpp"
#include "veracity/synthetic.hpp"

using namespace veracity;
using namespace veracity::testing;

namespace {

Corpus labeled_corpus(std::size_t n, std::size_t n_false) {
  std::vector<DocumentRecord> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(make_doc("d" + std::to_string(i), "text", 0, i < n_false ? Label::False : Label::True));
  }
  return Corpus::build(docs, {}, {}, {});
}

PipelineConfig small_pipeline_config() {
  PipelineConfig cfg;
  cfg.calibration.bins = 3;
  cfg.calibration.min_support = 5;
  cfg.affectflow.epochs = 100;
  return cfg;
}

const SyntheticCorpus& small_synthetic() {
  static const SyntheticCorpus syn = [] {
    SynthConfig cfg;
    cfg.n_docs = 300;
    cfg.actors_per_platform = 80;
    cfg.alias_pairs = 0;
    return generate_synthetic(cfg, 31);
  }();
  return syn;
}

}  // namespace

TEST(SplitFolds, SeventyTenTwenty) {
  auto corpus = labeled_corpus(100, 40);
  auto plan = split_folds(corpus, 10, 7);
  ASSERT_EQ(plan.folds.size(), 10u);
  std::set<std::string> tested;
  for (const auto& f : plan.folds) {
    EXPECT_EQ(f.train.size(), 70u);
    EXPECT_EQ(f.validation.size(), 10u);
    EXPECT_EQ(f.test.size(), 20u);
    std::set<std::string> all(f.train.begin(), f.train.end());
    all.insert(f.validation.begin(), f.validation.end());
    all.insert(f.test.begin(), f.test.end());
    EXPECT_EQ(all.size(), 100u);
    EXPECT_NO_THROW(assert_disjoint(f));
    tested.insert(f.test.begin(), f.test.end());
  }
  // Rotation by n/k with a 20-doc test window covers every doc twice.
  EXPECT_EQ(tested.size(), 100u);
}

TEST(SplitFolds, SeedDeterministicAndSeedSensitive) {
  auto corpus = labeled_corpus(100, 40);
  EXPECT_EQ(split_folds(corpus, 10, 3), split_folds(corpus, 10, 3));
  EXPECT_NE(split_folds(corpus, 10, 3), split_folds(corpus, 10, 4));
}

TEST(SplitFolds, Stratified) {
  auto corpus = labeled_corpus(100, 40);
  auto labels = corpus_labels(corpus);
  for (const auto& f : split_folds(corpus, 10, 11).folds) {
    auto falses = [&](const std::vector<std::string>& ids) {
      std::size_t n = 0;
      for (const auto& id : ids) n += labels.at(id) == Label::False ? 1 : 0;
      return n;
    };
    EXPECT_NEAR(static_cast<double>(falses(f.train)), 28.0, 1.0);
    EXPECT_NEAR(static_cast<double>(falses(f.validation)), 4.0, 1.0);
    EXPECT_NEAR(static_cast<double>(falses(f.test)), 8.0, 1.0);
  }
}

TEST(SplitFolds, Errors) {
  auto corpus = labeled_corpus(5, 2);
  EXPECT_THROW(split_folds(corpus, 10, 1), DataError);
  EXPECT_THROW(split_folds(corpus, 1, 1), UsageError);
}

TEST(AssertDisjoint, LeakIsLogicError) {
  Fold f{{"a", "b"}, {"c"}, {"b"}};
  EXPECT_THROW(assert_disjoint(f), std::logic_error);
}

TEST(Evaluate, HandConfusion) {
  std::vector<Prediction> preds;
  std::map<std::string, Label, std::less<>> labels;
  auto add = [&](const std::string& id, double p, Label l) {
    preds.push_back({id, p});
    labels[id] = l;
  };
  for (int i = 0; i < 8; ++i) add("tp" + std::to_string(i), 0.9, Label::False);
  for (int i = 0; i < 2; ++i) add("fp" + std::to_string(i), 0.7, Label::True);
  for (int i = 0; i < 4; ++i) add("fn" + std::to_string(i), 0.2, Label::False);
  for (int i = 0; i < 6; ++i) add("tn" + std::to_string(i), 0.1, Label::True);
  auto m = evaluate(preds, labels);
  EXPECT_EQ(m.confusion, (Confusion{8, 2, 6, 4}));
  EXPECT_DOUBLE_EQ(m.precision, 0.8);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f1, 8.0 / 11.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.7);
}

TEST(Evaluate, Conventions) {
  std::map<std::string, Label, std::less<>> labels{{"a", Label::False}, {"b", Label::True}, {"u", Label::Unknown}};
  std::vector<Prediction> perfect{{"a", 0.9}, {"b", 0.1}};
  EXPECT_EQ(evaluate(perfect, labels).f1, 1.0);
  std::vector<Prediction> none{{"a", 0.1}, {"b", 0.1}};
  EXPECT_EQ(evaluate(none, labels).f1, 0.0);
  EXPECT_EQ(evaluate(none, labels).precision, 0.0);
  std::vector<Prediction> tie{{"a", 0.5}};
  EXPECT_EQ(evaluate(tie, labels).confusion.tp, 1u);
  std::vector<Prediction> unknown{{"zzz", 0.5}};
  EXPECT_THROW(evaluate(unknown, labels), DataError);
  std::vector<Prediction> unlabeled{{"u", 0.5}};
  EXPECT_THROW(evaluate(unlabeled, labels), DataError);
  EXPECT_THROW(evaluate(perfect, labels, 0.0), UsageError);
}

TEST(BinnedF1, SingleBinAndCsv) {
  std::vector<CalibrationPoint> pts;
  for (int i = 0; i < 30; ++i) pts.push_back({5.0, 0.9, i % 2 ? Label::False : Label::True});
  auto rows = binned_f1(pts, 10, 20);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].support, 30u);
  EXPECT_NEAR(rows[0].f1, 2.0 * 15 / (2.0 * 15 + 15), 1e-12);
  auto csv = binned_f1_csv(rows, FactorId::WordCount);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "factor,bin,low,high,support,f1,f1_smoothed,under_supported");
}

TEST(BinnedF1, SmoothedIsMonotoneAndLowSupportFlagged) {
  std::vector<CalibrationPoint> pts;
  // Bins of 25: accuracy falls then rises, and a final tiny group.
  for (int i = 0; i < 100; ++i) {
    bool f = i % 2 == 0;
    bool right = (i < 25) || (i >= 50);
    pts.push_back({static_cast<double>(i), (f == right) ? 0.9 : 0.1, f ? Label::False : Label::True});
  }
  auto rows = binned_f1(pts, 4, 20);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].f1_smoothed, rows[i - 1].f1_smoothed);
  for (const auto& r : rows) EXPECT_FALSE(r.under_supported);
  auto sparse = binned_f1(pts, 4, 30);
  for (const auto& r : sparse) EXPECT_TRUE(r.under_supported);
}

TEST(Pipeline, TrainCalibrateDetectRoundTrip) {
  const auto& syn = small_synthetic();
  auto plan = split_folds(syn.corpus, 10, 1);
  Pipeline p(small_pipeline_config());
  p.train(syn.corpus, plan.folds[0].train);
  EXPECT_THROW(p.calibrate(syn.corpus, plan.folds[0].train), std::logic_error);
  p.calibrate(syn.corpus, plan.folds[0].validation);
  ASSERT_TRUE(p.calibrated());

  const auto& id = plan.folds[0].test.front();
  auto snap = syn.corpus.snapshot_at(id, syn.corpus.document(id).publish_time + kDay);
  auto det = p.detect(snap, syn.corpus);
  EXPECT_EQ(det.outputs.size(), 3u);
  EXPECT_GE(det.verdict.prob, 0.0);
  EXPECT_LE(det.verdict.prob, 1.0);

  auto back = Pipeline::from_json(p.to_json());
  EXPECT_EQ(back.to_json(), p.to_json());
  auto again = back.detect(snap, syn.corpus);
  EXPECT_EQ(again.verdict.prob, det.verdict.prob);
  EXPECT_EQ(explanation_to_text(again.explanation), explanation_to_text(det.explanation));
}

TEST(Replay, ContributionsSumToOneAndErrors) {
  const auto& syn = small_synthetic();
  auto plan = split_folds(syn.corpus, 10, 1);
  Pipeline p(small_pipeline_config());
  p.train(syn.corpus, plan.folds[0].train);
  p.calibrate(syn.corpus, plan.folds[0].validation);
  const auto& doc = syn.corpus.document(plan.folds[0].test.front());
  std::vector<Timestamp> times{doc.publish_time + 2 * kHour, doc.publish_time + 168 * kHour};
  auto steps = replay(syn.corpus, doc.doc_id, times, p);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_LE(steps[0].engagement_count, steps[1].engagement_count);
  for (const auto& s : steps) {
    if (s.verdict.insufficient_evidence) continue;
    double sum = 0.0;
    for (const auto& [m, c] : s.verdict.contributions) sum += c;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
  std::vector<Timestamp> one{doc.publish_time};
  EXPECT_EQ(replay(syn.corpus, doc.doc_id, one, p).size(), 1u);
  std::vector<Timestamp> backwards{doc.publish_time + 10, doc.publish_time};
  EXPECT_THROW(replay(syn.corpus, doc.doc_id, backwards, p), UsageError);
  EXPECT_THROW(replay(syn.corpus, "nope", one, p), DataError);
  std::vector<Timestamp> empty;
  EXPECT_THROW(replay(syn.corpus, doc.doc_id, empty, p), UsageError);
}

TEST(Replay, NoEngagementsGiveConstantContributions) {
  std::vector<DocumentRecord> docs;
  for (int i = 0; i < 60; ++i) {
    docs.push_back(make_doc("d" + std::to_string(i), i % 2 ? "calm quiet words here" : "angry furious outrage now",
                            0, i % 2 ? Label::True : Label::False));
  }
  auto corpus = Corpus::build(docs, {}, {}, {});
  auto plan = split_folds(corpus, 10, 2);
  Pipeline p(small_pipeline_config());
  p.train(corpus, plan.folds[0].train);
  p.calibrate(corpus, plan.folds[0].validation);
  std::vector<Timestamp> times{2 * kHour, 24 * kHour, 168 * kHour};
  auto steps = replay(corpus, plan.folds[0].test.front(), times, p);
  for (const auto& s : steps) {
    EXPECT_EQ(s.engagement_count, 0u);
    EXPECT_EQ(s.verdict.contributions, steps[0].verdict.contributions);
  }
}

TEST(CrossValidate, ParallelMatchesSerial) {
  const auto& syn = small_synthetic();
  auto cfg = small_pipeline_config();
  cfg.folds = 3;
  auto par = cross_validate(syn.corpus, cfg, 5, true);
  auto ser = cross_validate(syn.corpus, cfg, 5, false);
  EXPECT_EQ(par.metrics_csv(), ser.metrics_csv());
  EXPECT_EQ(par.plan, ser.plan);
  EXPECT_FALSE(par.pooled("affectflow", FactorId::WordCount).empty());
}

TEST(Config, UnknownKeysAndValidation) {
  EXPECT_THROW(config_from_json(nlohmann::json{{"colour", 1}}), UsageError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"synthetic", {{"n_dogs", 3}}}}), UsageError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"models", {"affectflow", "oracle"}}}), UsageError);
  EXPECT_THROW(config_from_json(nlohmann::json{{"threshold", 1.0}}), UsageError);
  auto cfg = config_from_json(nlohmann::json{{"bins", 7}, {"horizons_hours", {1, 48}}, {"combine", "product"}});
  EXPECT_EQ(cfg.calibration.bins, 7u);
  EXPECT_EQ(cfg.horizons, (std::vector<Timestamp>{kHour, 48 * kHour}));
  EXPECT_EQ(cfg.combine, CombineMode::Product);
  EXPECT_THROW(load_config("/nonexistent/config.json"), UsageError);
}
