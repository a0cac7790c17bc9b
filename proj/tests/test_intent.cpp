#include <gtest/gtest.h>

#include <random>

#include "veracity/intent.hpp"

using namespace veracity;

namespace {

double max_relative_fd_error(LinearEmbedding emb, const std::vector<std::vector<double>>& x,
                             std::span<const ContrastivePair> pairs, double margin) {
  std::vector<double> grad;
  contrastive_objective(emb, x, pairs, margin, &grad);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t k = 0; k < emb.w.size(); ++k) {
    const double w0 = emb.w[k];
    emb.w[k] = w0 + h;
    double up = contrastive_objective(emb, x, pairs, margin, nullptr);
    emb.w[k] = w0 - h;
    double down = contrastive_objective(emb, x, pairs, margin, nullptr);
    emb.w[k] = w0;
    double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1e-8, std::max(std::abs(fd), std::abs(grad[k]))));
  }
  return worst;
}

}  // namespace

TEST(Contrastive, SatisfiedConstraintsAreAFixedPoint) {
  // Same-intent rows coincide; the two groups sit 5 apart with margin 1.
  std::vector<std::vector<double>> x{{0, 0}, {0, 0}, {5, 0}, {5, 0}};
  std::vector<ContrastivePair> pairs{{0, 1, true}, {2, 3, true}, {0, 2, false}, {1, 3, false}};
  LinearEmbedding emb{2, 2, {1, 0, 0, 1}};
  std::vector<double> grad;
  EXPECT_EQ(contrastive_objective(emb, x, pairs, 1.0, &grad), 0.0);
  for (double g : grad) EXPECT_EQ(g, 0.0);
  auto res = intent_train(pairs, x, {1.0, 0.1, 5, 2, 1}, emb);
  EXPECT_EQ(res.embedding.w, emb.w);
}

TEST(Contrastive, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> x(12, std::vector<double>(4));
  for (auto& row : x) {
    for (auto& v : row) v = g(rng);
  }
  std::vector<Intent> labels;
  for (std::size_t i = 0; i < x.size(); ++i) labels.push_back(i % 2 == 0 ? Intent::Malicious : Intent::Benign);
  auto pairs = make_pairs(labels, 1000, 1);
  for (int trial = 0; trial < 5; ++trial) {
    LinearEmbedding emb{3, 4, std::vector<double>(12)};
    for (auto& w : emb.w) w = 0.3 * g(rng);
    EXPECT_LE(max_relative_fd_error(emb, x, pairs, 2.0), 1e-4);
  }
}

TEST(Contrastive, TrainingReducesLoss) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> x;
  std::vector<Intent> labels;
  for (int i = 0; i < 40; ++i) {
    bool mal = i % 2 == 0;
    x.push_back({(mal ? 1.5 : -1.5) + 0.3 * g(rng), g(rng), g(rng)});
    labels.push_back(mal ? Intent::Malicious : Intent::Benign);
  }
  auto model = IntentModel::train(x, labels, {});
  EXPECT_LT(model.loss_trace().back(), model.loss_trace().front());
  std::size_t right = 0;
  for (std::size_t i = 0; i < x.size(); ++i) right += model.classify(x[i]) == labels[i] ? 1 : 0;
  EXPECT_GE(right, 38u);
  auto back = IntentModel::from_json(model.to_json());
  for (const auto& row : x) EXPECT_EQ(back.classify(row), model.classify(row));
}

TEST(Classify, CentroidAndTieRules) {
  LinearEmbedding emb{2, 2, {1, 0, 0, 1}};
  Centroids c{{Intent::Malicious, {1.0, 0.0}}, {Intent::Benign, {-1.0, 0.0}}};
  std::vector<double> at_mal{1.0, 0.0}, at_ben{-1.0, 0.0}, mid{0.0, 3.0};
  EXPECT_EQ(intent_classify(emb, c, at_mal), Intent::Malicious);
  EXPECT_EQ(intent_classify(emb, c, at_ben), Intent::Benign);
  EXPECT_EQ(intent_classify(emb, c, mid), Intent::Unknown);
  Centroids partial{{Intent::Benign, {0.0, 0.0}}};
  EXPECT_THROW(intent_classify(emb, partial, mid), DataError);
}

TEST(Contrastive, InvalidInputs) {
  std::vector<std::vector<double>> x{{1.0}, {2.0}};
  std::vector<ContrastivePair> only_same{{0, 1, true}};
  EXPECT_THROW(intent_train(only_same, x, {}), DataError);
  std::vector<std::vector<double>> empty{{}, {}};
  std::vector<ContrastivePair> both{{0, 1, true}, {0, 1, false}};
  EXPECT_THROW(intent_train(both, empty, {}), DataError);
  std::vector<ContrastivePair> out_of_range{{0, 5, true}, {0, 1, false}};
  EXPECT_THROW(intent_train(out_of_range, x, {}), DataError);
}

TEST(MakePairs, SkipsUnknownAndSubsamplesDeterministically) {
  std::vector<Intent> labels{Intent::Malicious, Intent::Unknown, Intent::Benign, Intent::Malicious};
  auto all = make_pairs(labels, 100, 1);
  EXPECT_EQ(all.size(), 3u);
  auto sub1 = make_pairs(labels, 2, 4);
  auto sub2 = make_pairs(labels, 2, 4);
  ASSERT_EQ(sub1.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(std::tie(sub1[i].u, sub1[i].v), std::tie(sub2[i].u, sub2[i].v));
}
