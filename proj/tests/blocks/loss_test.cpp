#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gradient_check.hpp"
#include "portanet/error.hpp"
#include "portanet/layer.hpp"
#include "portanet/ops/loss.hpp"

namespace portanet {
namespace {

using testing::check_layer;
using testing::fill_uniform;

struct LossCase {
  std::vector<float> scores;
  std::vector<float> labels;
  std::vector<float> prob;
  std::size_t rows;
  std::size_t cols;

  LossCase(std::vector<float> s, std::vector<float> l, std::size_t cols)
      : scores(std::move(s)), labels(std::move(l)), prob(scores.size()), rows(scores.size() / cols), cols(cols) {}

  float forward() {
    return softmax_loss_forward(as_matrix(std::span(std::as_const(scores)), rows, cols), labels,
                                as_matrix(std::span(prob), rows, cols));
  }

  std::vector<float> backward(float weight = 1.0f) {
    std::vector<float> diff(scores.size());
    softmax_loss_backward(as_matrix(std::span(std::as_const(prob)), rows, cols), labels, weight,
                          as_matrix(std::span(diff), rows, cols));
    return diff;
  }
};

TEST(SoftmaxLoss, UniformScoresGiveLogClasses) {
  LossCase c(std::vector<float>(20, 0.0f), {3.0f, 7.0f}, 10);
  EXPECT_NEAR(c.forward(), std::log(10.0f), 1e-4f);
}

TEST(SoftmaxLoss, ConfidentCorrectPredictionHasZeroLoss) {
  LossCase c({100.0f, 0.0f, 0.0f}, {0.0f}, 3);
  EXPECT_NEAR(c.forward(), 0.0f, 1e-6f);
}

TEST(SoftmaxLoss, ConfidentWrongPredictionStaysFinite) {
  LossCase c({200.0f, -200.0f}, {1.0f}, 2);
  const float loss = c.forward();
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_GT(loss, 80.0f);
}

TEST(SoftmaxLoss, MatchesScalarOracle) {
  Rng rng(71);
  std::vector<float> scores(12);
  fill_uniform(scores, rng, -3.0f, 3.0f);
  const std::vector<float> labels{2.0f, 0.0f, 1.0f, 2.0f};
  LossCase c(scores, labels, 3);
  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += std::exp(static_cast<double>(scores[i * 3 + j]));
    expected -= std::log(std::exp(static_cast<double>(scores[i * 3 + static_cast<std::size_t>(labels[i])])) / sum);
  }
  expected /= 4.0;
  EXPECT_NEAR(c.forward(), expected, 1e-5);

  const auto diff = c.backward();
  for (std::size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) sum += std::exp(static_cast<double>(scores[i * 3 + j]));
    for (std::size_t j = 0; j < 3; ++j) {
      const double p = std::exp(static_cast<double>(scores[i * 3 + j])) / sum;
      const double want = (p - (j == static_cast<std::size_t>(labels[i]) ? 1.0 : 0.0)) / 4.0;
      EXPECT_NEAR(diff[i * 3 + j], want, 1e-6);
    }
  }
}

TEST(SoftmaxLoss, PerfectOneHotGivesZeroGradient) {
  LossCase c({200.0f, 0.0f, 0.0f, 0.0f, 0.0f, 200.0f}, {0.0f, 2.0f}, 3);
  c.forward();
  for (float v : c.backward()) EXPECT_NEAR(v, 0.0f, 1e-7f);
}

TEST(SoftmaxLoss, GradientRowsSumToZero) {
  Rng rng(72);
  std::vector<float> scores(50);
  fill_uniform(scores, rng, -4.0f, 4.0f);
  LossCase c(scores, {0.0f, 9.0f, 4.0f, 4.0f, 1.0f}, 10);
  c.forward();
  const auto diff = c.backward();
  for (std::size_t i = 0; i < 5; ++i) {
    const double sum = std::accumulate(diff.begin() + static_cast<long>(i * 10), diff.begin() + static_cast<long>(i * 10 + 10), 0.0);
    EXPECT_NEAR(sum, 0.0, 1e-7);
  }
}

TEST(SoftmaxLoss, LossWeightScalesGradient) {
  Rng rng(73);
  std::vector<float> scores(6);
  fill_uniform(scores, rng);
  LossCase c(scores, {1.0f, 0.0f}, 3);
  c.forward();
  const auto one = c.backward(1.0f);
  const auto two = c.backward(2.0f);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(two[i], 2.0f * one[i]);
}

TEST(SoftmaxLoss, LabelOutOfRangeIsRejected) {
  LossCase high(std::vector<float>(6, 0.0f), {0.0f, 3.0f}, 3);
  EXPECT_THROW(high.forward(), InputError);
  LossCase negative(std::vector<float>(6, 0.0f), {-1.0f, 0.0f}, 3);
  EXPECT_THROW(negative.forward(), InputError);
  LossCase fraction(std::vector<float>(6, 0.0f), {0.5f, 0.0f}, 3);
  EXPECT_THROW(fraction.forward(), InputError);
}

TEST(SoftmaxLoss, GradientCheck) {
  Rng rng(74);
  SoftmaxWithLossLayer layer("loss", 1.0f);
  Blob scores(Shape{4, 5}), labels(Shape{4}), top;
  std::vector<Blob*> b{&scores, &labels}, t{&top};
  layer.reshape(b, t);
  fill_uniform(scores.data().values(), rng, -2.0f, 2.0f);
  labels.data().values()[0] = 0.0f;
  labels.data().values()[1] = 4.0f;
  labels.data().values()[2] = 2.0f;
  labels.data().values()[3] = 2.0f;
  const auto report = check_layer(layer, b, t, {0}, rng);
  EXPECT_TRUE(report.ok()) << report.first_failure;
}

TEST(SoftmaxLoss, LayerReportsScalarTop) {
  SoftmaxWithLossLayer layer("loss", 1.0f);
  Blob scores(Shape{2, 3, 1, 1}), labels(Shape{2}), top;
  std::vector<Blob*> b{&scores, &labels}, t{&top};
  layer.reshape(b, t);
  EXPECT_EQ(top.count(), 1u);
  layer.forward(b, t);
  EXPECT_NEAR(top.data()[0], std::log(3.0f), 1e-6f);
}

TEST(Accuracy, OneHotScoresAreFullyCorrect) {
  const std::vector<float> scores{0, 1, 0, 1, 0, 0, 0, 0, 1};
  const std::vector<float> labels{1, 0, 2};
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 3, 3), labels, 1), 1.0f);
}

TEST(Accuracy, AllWrong) {
  const std::vector<float> scores{0, 1, 0, 1, 0, 0, 0, 0, 1};
  const std::vector<float> labels{0, 2, 1};
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 3, 3), labels, 1), 0.0f);
}

TEST(Accuracy, TopKOfAllClassesIsAlwaysCorrect) {
  Rng rng(75);
  std::vector<float> scores(40);
  fill_uniform(scores, rng);
  const std::vector<float> labels{0, 1, 2, 3, 3, 2, 1, 0, 0, 3};
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 10, 4), labels, 4), 1.0f);
}

TEST(Accuracy, TopTwo) {
  const std::vector<float> scores{0.1f, 0.5f, 0.4f, 0.6f, 0.3f, 0.1f};
  const std::vector<float> labels{2, 2};
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 2, 3), labels, 2), 0.5f);
}

TEST(Accuracy, TiesRankLowerClassFirst) {
  const std::vector<float> scores{0.5f, 0.5f, 0.0f};
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 1, 3), std::vector<float>{0}, 1), 1.0f);
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 1, 3), std::vector<float>{1}, 1), 0.0f);
  EXPECT_EQ(accuracy(as_matrix(std::span(scores), 1, 3), std::vector<float>{1}, 2), 1.0f);
}

TEST(Accuracy, LabelOutOfRangeIsRejected) {
  const std::vector<float> scores(6, 0.0f);
  EXPECT_THROW(accuracy(as_matrix(std::span(scores), 2, 3), std::vector<float>{0, 3}, 1), InputError);
}

TEST(Accuracy, LayerChecksConfiguration) {
  Blob scores(Shape{2, 3}), labels(Shape{2}), wrong(Shape{3}), top;
  AccuracyLayer too_many("acc", 4);
  std::vector<Blob*> b{&scores, &labels}, t{&top};
  EXPECT_THROW(too_many.reshape(b, t), ConfigError);
  AccuracyLayer layer("acc", 1);
  std::vector<Blob*> mismatched{&scores, &wrong};
  EXPECT_THROW(layer.reshape(mismatched, t), ShapeError);
}

}  // namespace
}  // namespace portanet
