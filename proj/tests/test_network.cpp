#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "toponym/network.hpp"

using namespace toponym;

namespace {

ArchConfig small_arch(std::size_t in = 20, std::size_t hidden = 3, std::size_t units = 8,
                      double dropout = 0.0) {
  ArchConfig a;
  a.input_dim = in;
  a.hidden_layers = hidden;
  a.hidden_units = units;
  a.dropout_p = dropout;
  return a;
}

Vector random_input(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Vector x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

double loss_at(const ModelParams& m, const Vector& x, Label y, double w) {
  const auto r = forward(m, x, Mode::Infer);
  return -w * std::log(r.prediction.probabilities[class_index(y)]);
}

}  // namespace

TEST(Init, DeterministicInSeed) {
  const auto a = init_model(small_arch(), 11);
  EXPECT_EQ(a, init_model(small_arch(), 11));
  EXPECT_NE(a, init_model(small_arch(), 12));
}

TEST(Init, ShapesBoundsAndZeroBiases) {
  const auto m = init_model(small_arch(20, 3, 8), 1);
  ASSERT_EQ(m.layers.size(), 4u);
  std::size_t fan_in = 20;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& l = m.layers[k];
    EXPECT_EQ(l.weights.cols(), fan_in);
    EXPECT_EQ(l.weights.rows(), k == 3 ? 2u : 8u);
    const double bound = std::sqrt(6.0 / double(fan_in));
    for (double w : l.weights.span()) EXPECT_LE(std::abs(w), bound);
    for (double b : l.bias) EXPECT_EQ(b, 0.0);
    fan_in = l.weights.rows();
  }
  EXPECT_EQ(m.parameter_count(), (20u * 8 + 8) + 2 * (8 * 8 + 8) + (8 * 2 + 2));
}

TEST(Init, DefaultArchitecture) {
  ArchConfig a;
  a.input_dim = 1000;
  const auto m = init_model(a, 0);
  EXPECT_EQ(m.layers.size(), 4u);
  EXPECT_EQ(m.layers[0].weights.rows(), 500u);
  EXPECT_EQ(ArchConfig::baseline(10).hidden_units, 150u);
  EXPECT_EQ(ArchConfig::baseline(10).hidden_layers, 2u);
}

TEST(Init, InvalidArchitecture) {
  EXPECT_THROW(init_model(small_arch(0), 1), InvalidInput);
  EXPECT_THROW(init_model(small_arch(4, 1, 4, 1.0), 1), InvalidInput);
}

TEST(Forward, ZeroInputGivesUniformOutput) {
  const auto m = init_model(small_arch(), 3);
  const auto p = predict(m, Vector(20));
  EXPECT_DOUBLE_EQ(p.p_toponym(), 0.5);
  EXPECT_DOUBLE_EQ(p.p_non_toponym(), 0.5);
  EXPECT_EQ(p.label, Label::NonToponym);
}

TEST(Forward, TrainEqualsInferWithoutDropout) {
  const auto m = init_model(small_arch(), 3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vector x = random_input(20, rng);
    EXPECT_EQ(forward(m, x, Mode::Train, &rng).prediction.probabilities, predict(m, x).probabilities);
  }
}

TEST(Forward, InferenceIsDeterministic) {
  const auto m = init_model(small_arch(20, 3, 8, 0.5), 3);
  std::mt19937_64 rng(1);
  const Vector x = random_input(20, rng);
  EXPECT_EQ(predict(m, x).probabilities, predict(m, x).probabilities);
}

TEST(Forward, WrongInputLength) {
  const auto m = init_model(small_arch(), 3);
  EXPECT_THROW(predict(m, Vector(19)), InvalidInput);
}

TEST(Forward, TrainModeWithDropoutNeedsRng) {
  const auto m = init_model(small_arch(20, 1, 8, 0.5), 3);
  EXPECT_THROW(forward(m, Vector(20), Mode::Train), InvalidInput);
}

TEST(Dropout, MaskExpectationMatchesKeepRate) {
  // A single hidden layer of ones: every unit passes through relu unchanged,
  // so the mean of the masked activations estimates 1.
  ArchConfig a = small_arch(1, 1, 100, 0.5);
  ModelParams m = init_model(a, 1);
  for (auto& w : m.layers[0].weights.span()) w = 1.0;
  std::mt19937_64 rng(99);
  double sum = 0.0;
  std::size_t kept = 0, total = 0;
  for (int i = 0; i < 100; ++i) {
    const auto r = forward(m, Vector{1.0}, Mode::Train, &rng);
    for (double v : r.trace.inputs[1]) {
      sum += v;
      kept += v != 0.0;
      ++total;
    }
  }
  EXPECT_NEAR(sum / double(total), 1.0, 0.02);
  EXPECT_NEAR(double(kept) / double(total), 0.5, 0.02);
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ModelParams m = init_model(small_arch(), seed);
    for (auto& l : m.layers) {
      for (auto& b : l.bias) b = 0.1 * (2.0 * detail::uniform01(rng) - 1.0);
    }
    const Vector x = random_input(20, rng);
    const Label y = seed % 2 ? Label::Toponym : Label::NonToponym;
    const auto g = backward(m, forward(m, x, Mode::Infer).trace, y, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
      auto check = [&](std::span<double> p, std::span<const double> gp) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double orig = p[i];
          p[i] = orig + h;
          const double up = loss_at(m, x, y, 1.0);
          p[i] = orig - h;
          const double down = loss_at(m, x, y, 1.0);
          p[i] = orig;
          const double num = (up - down) / (2 * h);
          const double rel = std::abs(num - gp[i]) / std::max({std::abs(num), std::abs(gp[i]), 1e-6});
          worst = std::max(worst, rel);
        }
      };
      check(m.layers[k].weights.span(), g.layers[k].weights.span());
      check(m.layers[k].bias.span(), g.layers[k].bias.span());
    }
    EXPECT_LT(worst, 1e-4) << "seed " << seed;
  }
}

TEST(Backward, ClassWeightScalesGradient) {
  const auto m = init_model(small_arch(), 5);
  std::mt19937_64 rng(2);
  const auto trace = forward(m, random_input(20, rng), Mode::Infer).trace;
  const auto g1 = backward(m, trace, Label::Toponym, 1.0);
  const auto g2 = backward(m, trace, Label::Toponym, 2.0);
  for (std::size_t k = 0; k < g1.layers.size(); ++k) {
    const auto a = g1.layers[k].weights.span();
    const auto b = g2.layers[k].weights.span();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_DOUBLE_EQ(b[i], 2.0 * a[i]);
  }
}

TEST(Backward, DroppedUnitsGetNoGradient) {
  const auto m = init_model(small_arch(20, 1, 50, 0.5), 5);
  std::mt19937_64 rng(8);
  const auto trace = forward(m, random_input(20, rng), Mode::Train, &rng).trace;
  const auto g = backward(m, trace, Label::Toponym, 1.0);
  for (std::size_t i = 0; i < 50; ++i) {
    if (trace.masks[0][i] == 0.0) {
      EXPECT_EQ(g.layers[0].bias[i], 0.0);
      EXPECT_EQ(g.layers[1].weights(0, i), 0.0);
    }
  }
}

TEST(Serialization, RoundTripBitExact) {
  const auto m = init_model(small_arch(20, 2, 8, 0.5), 77);
  const std::string bytes = serialize_model(m);
  const auto back = deserialize_model(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_EQ(bytes.substr(0, 8), "TOPODFNN");
  EXPECT_EQ(bytes.size(), 8u + 4 + 8 * 7 + 3 * 16 + 8 * m.parameter_count());
}

TEST(Serialization, FileRoundTrip) {
  toponym::testing::TempDir dir;
  const auto m = init_model(small_arch(), 4);
  const auto path = (dir / "m.dffnn").string();
  save_model(m, path);
  EXPECT_EQ(load_model(path), m);
}

TEST(Serialization, RejectsBadMagicVersionAndDimensions) {
  const auto m = init_model(small_arch(20, 1, 4), 4);
  std::string bytes = serialize_model(m);

  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(deserialize_model(bad), SerializationError);

  bad = bytes;
  bad[8] = 2;
  EXPECT_THROW(deserialize_model(bad), SerializationError);

  bad = bytes;
  bad[12] = 21;  // input_dim no longer matches the first layer's columns
  EXPECT_THROW(deserialize_model(bad), SerializationError);

  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() - 1)), SerializationError);
  EXPECT_THROW(deserialize_model(bytes + "x"), SerializationError);
  EXPECT_THROW(load_model("/nonexistent/model.dffnn"), SerializationError);
}
