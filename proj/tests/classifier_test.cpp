#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pcbd/classifier.hpp"
#include "pcbd/estimation.hpp"
#include "pcbd/shapes.hpp"
#include "reference_network.hpp"

namespace pcbd {
namespace {

using testing::channels_won;
using testing::reference_logits;

PointCloud small_cloud() { return generate_shape(2, 32, 4); }

TEST(Predict, ArgmaxWithLowestIndexTies) {
  const std::vector<double> a{0.1, 2.3, -1.0};
  const std::vector<double> b{1.0, 1.0, 0.0};
  EXPECT_EQ(argmax_class(a), 1u);
  EXPECT_EQ(argmax_class(b), 0u);
}

TEST(Forward, MatchesReferenceImplementation) {
  const ClassifierWeights w = ClassifierWeights::random(5, 0);
  const PointCloud x{{0.1, -0.2, 0.3}, {0.9, 0.1, -0.4}, {-0.5, 0.5, 0.5}, {0.0, -1.0, 0.2}};
  const auto got = forward_logits(w, x);
  const auto want = reference_logits(w, x);
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < got.size(); ++k) EXPECT_NEAR(got[k], want[k], 1e-9);
}

TEST(Forward, PermutationAndDuplicateInvariance) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const ClassifierWeights w = ClassifierWeights::random(4, rng.next());
    PointCloud x = generate_shape(rng.below(kNumShapeFamilies), 64, rng.next());
    const auto base = forward_logits(w, x);

    PointCloud perm = x;
    rng.shuffle(perm.points);
    EXPECT_EQ(forward_logits(w, perm), base);

    PointCloud dup = x;
    dup.points.push_back(x[0]);
    EXPECT_EQ(forward_logits(w, dup), base);
  }
}

TEST(Forward, NonWinningInsertionLeavesLogitsUnchanged) {
  const ClassifierWeights w = ClassifierWeights::random(4, 8);
  const PointCloud x = small_cloud();
  bool found = false;
  for (std::size_t i = 0; i < x.size() && !found; ++i) {
    const Point3 c = x[i] * 0.5;
    if (channels_won(w, x, c) != 0) continue;
    found = true;
    PointCloud with = x;
    with.points.push_back(c);
    EXPECT_EQ(forward_logits(w, with), forward_logits(w, x));
    EXPECT_EQ(loss_gradient_wrt_point(w, x, c, MarginSpec::untargeted(0)), (Point3{}));
    EXPECT_EQ(loss_gradient_wrt_point(w, x, c, MarginSpec::targeted(0, 2)), (Point3{}));
  }
  EXPECT_TRUE(found) << "no interior probe point failed to win a channel";
}

TEST(Forward, DimensionMismatchIsInvalid) {
  ClassifierWeights w = ClassifierWeights::random(3, 1);
  w.point2.weight.pop_back();
  EXPECT_THROW(forward_logits(w, small_cloud()), InvalidInput);
  EXPECT_THROW(forward_logits(ClassifierWeights::random(3, 1), PointCloud{}), InvalidInput);
}

// Central differences of the margin along each axis.
Point3 fd_gradient(const ClassifierWeights& w, const PointCloud& x, const Point3& c,
                   const MarginSpec& spec, double h, bool* locally_linear) {
  auto f = [&](const Point3& at) {
    PointCloud with = x;
    with.points.push_back(at);
    return margin_value(forward_logits(w, with), spec);
  };
  const Point3 axes[3] = {{h, 0, 0}, {0, h, 0}, {0, 0, h}};
  double g[3];
  const double f0 = f(c);
  *locally_linear = true;
  for (int k = 0; k < 3; ++k) {
    const double fp = f(c + axes[k]);
    const double fm = f(c - axes[k]);
    g[k] = (fp - fm) / (2 * h);
    const double fwd = (fp - f0) / h;
    const double bwd = (f0 - fm) / h;
    if (std::abs(fwd - bwd) > 1e-6 * std::max(1.0, std::abs(g[k]))) *locally_linear = false;
  }
  return {g[0], g[1], g[2]};
}

TEST(Gradient, MatchesFiniteDifferences) {
  Rng rng(99);
  int checked = 0;
  while (checked < 50) {
    const ClassifierWeights w = ClassifierWeights::random(5, rng.next());
    const PointCloud x = generate_shape(rng.below(kNumShapeFamilies), 32, rng.next());
    const Point3 c{1.5 * rng.normal(), 1.5 * rng.normal(), 1.5 * rng.normal()};
    if (channels_won(w, x, c) == 0) continue;
    const MarginSpec spec = checked % 2 ? MarginSpec::untargeted(rng.below(5))
                                        : MarginSpec::targeted(0, 1 + rng.below(4));
    bool linear = false;
    const Point3 fd = fd_gradient(w, x, c, spec, 1e-4, &linear);
    if (!linear) continue;  // a ReLU/pool/argmax switch lies within the stencil
    const Point3 g = loss_gradient_wrt_point(w, x, c, spec);
    const double scale = std::max({norm(fd), norm(g), 1e-12});
    EXPECT_LE(norm(g - fd) / scale, 1e-3);
    ++checked;
  }
}

TEST(Gradient, PenaltyOnlyWhenMarginIsGatedOff) {
  const ClassifierWeights w = ClassifierWeights::random(4, 8);
  const PointCloud x = small_cloud();
  const std::span<const PointCloud> one(&x, 1);
  const detail::InsertionProblem problem(w, one, MarginSpec::untargeted(1));
  const double lambda = 0.37;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Point3 c = x[i] * 0.5;
    if (channels_won(w, x, c) != 0) continue;
    Point3 grad;
    problem.loss_and_gradient(c, lambda, grad);
    EXPECT_EQ(grad, lambda * distance_gradient(c, x));
    return;
  }
  FAIL() << "no non-winning probe point";
}

Dataset tiny_dataset(std::size_t classes, std::size_t per_class, std::size_t points) {
  Dataset data;
  data.num_classes = classes;
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t i = 0; i < per_class; ++i) {
      data.samples.push_back({generate_shape(k, points, 100 + i), k});
    }
  }
  return data;
}

TEST(Train, DeterministicForFixedSeed) {
  const Dataset data = tiny_dataset(3, 6, 32);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.seed = 17;
  EXPECT_EQ(train(data, cfg), train(data, cfg));
  const ClassifierWeights first = train(data, cfg);
  cfg.seed = 18;
  EXPECT_NE(train(data, cfg), first);
}

TEST(Train, LossDecreases) {
  const Dataset data = tiny_dataset(4, 10, 64);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 8;
  cfg.seed = 2;
  std::vector<double> history;
  train(data, cfg, &history);
  ASSERT_EQ(history.size(), 8u);
  EXPECT_LT(history.back(), history.front());
}

TEST(Train, RejectsEmptyClassAndBadConfig) {
  Dataset data = tiny_dataset(2, 3, 32);
  data.num_classes = 3;
  EXPECT_THROW(train(data, TrainConfig{}), InvalidInput);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  EXPECT_THROW(train(tiny_dataset(2, 3, 32), bad), InvalidInput);
}

TEST(Weights, SaveLoadRoundTripIsBitExact) {
  const ClassifierWeights w = ClassifierWeights::random(6, 42);
  std::stringstream buf;
  write_weights(buf, w);
  const ClassifierWeights back = read_weights(buf);
  EXPECT_EQ(back, w);
  const PointCloud probe = small_cloud();
  EXPECT_EQ(forward_logits(back, probe), forward_logits(w, probe));
}

TEST(Weights, TruncatedFileFails) {
  std::stringstream buf;
  write_weights(buf, ClassifierWeights::random(3, 1));
  const std::string text = buf.str();
  std::istringstream cut(text.substr(0, text.size() / 2));
  EXPECT_THROW(read_weights(cut), LoadError);
  std::istringstream no_end(text.substr(0, text.rfind("end")));
  EXPECT_THROW(read_weights(no_end), LoadError);
}

TEST(Weights, VersionMismatchFails) {
  std::stringstream buf;
  write_weights(buf, ClassifierWeights::random(3, 1));
  std::string text = buf.str();
  text.replace(text.find(" 1\n"), 3, " 2\n");
  std::istringstream in(text);
  EXPECT_THROW(read_weights(in), LoadError);
}

TEST(Weights, WrongClassCountIsADimensionError) {
  const ClassifierWeights w = ClassifierWeights::random(3, 1);
  const Dataset data = tiny_dataset(4, 1, 32);
  EXPECT_THROW(accuracy(w, data), InvalidInput);
  EXPECT_THROW(check_compatible(w, 4), InvalidInput);
  EXPECT_NO_THROW(check_compatible(w, 3));
}

}  // namespace
}  // namespace pcbd
