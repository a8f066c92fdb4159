#include <gtest/gtest.h>

#include "support.hpp"

using namespace cegarette;
using namespace cegarette::testing;

TEST(Evaluate, RunningExampleOutputs) {
  const Network net = example_network();
  EXPECT_DOUBLE_EQ(evaluate(net, Vector{21.0}).front(), 714.0);
  EXPECT_DOUBLE_EQ(evaluate(net, Vector{20.0}).front(), 680.0);
}

TEST(Evaluate, ZeroNetworkIsZero) {
  Layer hidden{Matrix(3, 2), Vector(3, 0.0), Activation::Relu};
  Layer out{Matrix(1, 3), Vector(1, 0.0), Activation::Identity};
  const Network net(2, {hidden, out});
  Rng rng(7);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(evaluate_scalar(net, Vector{rng.uniform(-5, 5), rng.uniform(-5, 5)}), 0.0);
}

TEST(Evaluate, DimensionMismatchIsInputError) {
  EXPECT_THROW(evaluate(example_network(), Vector{1.0, 2.0}), InputError);
}

TEST(Evaluate, ReluOnlyOnHiddenLayers) {
  // Output layer is affine, so negative outputs survive.
  Layer hidden{Matrix::from_rows({{1.0}}), {0.0}, Activation::Relu};
  Layer out{Matrix::from_rows({{-2.0}}), {-1.0}, Activation::Identity};
  const Network net(1, {hidden, out});
  EXPECT_DOUBLE_EQ(evaluate_scalar(net, Vector{3.0}), -7.0);
  EXPECT_DOUBLE_EQ(evaluate_scalar(net, Vector{-3.0}), -1.0);
}

TEST(Evaluate, Deterministic) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const Network net = random_small_net(rng, 3, 4, 6);
    const Vector x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Vector a = evaluate(net, x);
    const Vector b = evaluate(net, x);
    EXPECT_EQ(a, b);
  }
}

// When every hidden pre-activation is nonnegative, the ReLUs are identities
// and the network equals the product of its affine maps.
TEST(Evaluate, ReluIdempotenceOnNonnegativeNetworks) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<Layer> layers;
    std::size_t prev = 3;
    for (std::size_t s : {4, 5, 1}) {
      Layer l{Matrix(s, prev), Vector(s), s == 1 ? Activation::Identity : Activation::Relu};
      for (std::size_t r = 0; r < s; ++r) {
        for (std::size_t c = 0; c < prev; ++c) l.weights(r, c) = rng.uniform(0.0, 1.0);
        l.biases[r] = rng.uniform(0.0, 0.5);
      }
      layers.push_back(l);
      prev = s;
    }
    const Network net(3, layers);
    const Vector x{rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    Vector v = x;
    for (const Layer& l : layers) {
      Vector next(l.size());
      for (std::size_t j = 0; j < l.size(); ++j) {
        next[j] = l.biases[j];
        for (std::size_t k = 0; k < v.size(); ++k) next[j] += l.weights(j, k) * v[k];
      }
      v = next;
    }
    EXPECT_NEAR(evaluate_scalar(net, x), v.front(), 1e-12);
  }
}

TEST(NetworkValidation, RejectsBrokenShapes) {
  Layer good{Matrix::from_rows({{1.0}}), {0.0}, Activation::Identity};
  EXPECT_THROW(Network(1, {}), ValidationError);
  EXPECT_THROW(Network(2, {good}), ValidationError);  // column mismatch
  Layer relu_out{Matrix::from_rows({{1.0}}), {0.0}, Activation::Relu};
  EXPECT_THROW(Network(1, {relu_out}), ValidationError);
  Layer nan_layer{Matrix::from_rows({{std::nan("")}}), {0.0}, Activation::Identity};
  EXPECT_THROW(Network(1, {nan_layer}), ValidationError);
}

TEST(QueryValidation, ChecksArity) {
  EXPECT_THROW(InputBox({1.0}, {0.0}), ValidationError);
  EXPECT_THROW(Query(example_network(), InputBox({0.0, 0.0}, {1.0, 1.0}), OutputProperty{0.0}), ValidationError);
  Layer two_out{Matrix::from_rows({{1.0}, {2.0}}), {0.0, 0.0}, Activation::Identity};
  EXPECT_THROW(Query(Network(1, {two_out}), InputBox({0.0}, {1.0}), OutputProperty{0.0}), ValidationError);
}
