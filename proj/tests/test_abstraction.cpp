#include <gtest/gtest.h>

#include "support.hpp"

using namespace cegarette;
using namespace cegarette::testing;

namespace {

std::shared_ptr<const CategorizedNetwork> categorize(const Network& net) {
  return std::make_shared<const CategorizedNetwork>(preprocess(net));
}

// Random legal merge: two neurons of one mergeable layer sharing a category
// but not a group. Returns false if none exists.
bool random_merge(Rng& rng, AbstractionState& s) {
  std::vector<std::pair<NeuronId, NeuronId>> pairs;
  const auto& cats = s.base().categories;
  for (std::size_t li = 0; li < cats.size(); ++li) {
    if (!s.policy().mergeable(li)) continue;
    for (std::size_t a = 0; a < cats[li].size(); ++a)
      for (std::size_t b = a + 1; b < cats[li].size(); ++b)
        if (cats[li][a] == cats[li][b] && s.group_of({li, a}) != s.group_of({li, b}))
          pairs.push_back({{li, a}, {li, b}});
  }
  if (pairs.empty()) return false;
  const auto& [a, b] = pairs[rng.integer(0, pairs.size() - 1)];
  s = merge_pair(s, a, b);
  return true;
}

}  // namespace

TEST(Abstraction, RunningExampleSaturatesToMergedNet) {
  const auto base = categorize(example_network());
  const AbstractionState s = abstract_to_saturation(base, MergePolicy::for_box(InputBox({20.0}, {21.0})));
  EXPECT_EQ(s.network(), merged_example_network());
  EXPECT_EQ(s.merge_excess(), 1u);
  EXPECT_EQ(s.groups()[0][0], (std::vector<std::size_t>{0, 1}));
}

TEST(Abstraction, MergePairMatchesRunningExample) {
  const auto base = categorize(example_network());
  const AbstractionState id = AbstractionState::identity(base, MergePolicy{true});
  const AbstractionState s = merge_pair(id, {0, 0}, {0, 1});
  EXPECT_EQ(s.network().layer(0).weights(0, 0), 10.0);
  EXPECT_EQ(s.network().layer(1).weights(0, 0), 7.0);
}

TEST(Abstraction, MergingDuplicatesDoublesOutgoing) {
  Layer l0{Matrix::from_rows({{0.5}, {1.5}}), {0.2, 0.0}, Activation::Relu};
  Layer l1{Matrix::from_rows({{2.0, -1.0}, {2.0, -1.0}}), {0.3, 0.3}, Activation::Relu};
  Layer out{Matrix::from_rows({{1.25, 1.25}}), {0.0}, Activation::Identity};
  const auto base = categorize(Network(1, {l0, l1, out}));
  const auto s = merge_pair(AbstractionState::identity(base, MergePolicy{}), {1, 0}, {1, 1});
  const Layer& merged = s.network().layer(1);
  ASSERT_EQ(merged.size(), 1u);
  for (std::size_t k = 0; k < merged.fan_in(); ++k) EXPECT_EQ(merged.weights(0, k), base->network.layer(1).weights(0, k));
  EXPECT_EQ(merged.biases[0], 0.3);
  EXPECT_EQ(s.network().layer(2).weights(0, 0), 2.5);
}

TEST(Abstraction, MergePreconditions) {
  Layer l0{Matrix::from_rows({{1.0}, {1.0}}), {0.0, 0.0}, Activation::Relu};
  Layer out{Matrix::from_rows({{1.0, -1.0}}), {0.0}, Activation::Identity};
  const auto base = categorize(Network(1, {l0, out}));
  const auto id = AbstractionState::identity(base, MergePolicy{true});
  EXPECT_THROW(merge_pair(id, {0, 0}, {0, 1}), PreconditionError);  // pos/inc vs neg/dec
  const auto closed = AbstractionState::identity(base, MergePolicy{false});
  EXPECT_THROW(merge_pair(closed, {0, 0}, {0, 0}), PreconditionError);
}

TEST(Abstraction, DistinctCategoriesSaturateToIdentity) {
  Layer l0{Matrix::from_rows({{1.0}, {1.0}}), {0.0, 0.0}, Activation::Relu};
  Layer out{Matrix::from_rows({{1.0, -1.0}}), {0.0}, Activation::Identity};
  const Network net(1, {l0, out});
  const auto s = abstract_to_saturation(categorize(net), MergePolicy{true});
  EXPECT_EQ(s.merge_excess(), 0u);
  EXPECT_EQ(s.network(), net);
}

TEST(Abstraction, FirstLayerClosedOnSignedBox) {
  const auto s = abstract_to_saturation(categorize(example_network()), MergePolicy::for_box(InputBox({-1.0}, {1.0})));
  EXPECT_EQ(s.merge_excess(), 0u);
  EXPECT_EQ(s.network(), example_network());
}

TEST(Abstraction, RunningExampleRefinesBack) {
  const auto base = categorize(example_network());
  const auto s = abstract_to_saturation(base, MergePolicy{true});
  const auto r = refine_split(s, Vector{20.0}, 1);
  EXPECT_TRUE(r.fully_refined());
  EXPECT_EQ(r.network(), example_network());
  EXPECT_THROW(refine_split(r, Vector{20.0}, 1), CannotRefine);
}

TEST(Abstraction, LargeBatchFullyRefines) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Network net = random_small_net(rng, 2, 3, 5);
    const auto base = categorize(net);
    const InputBox box = random_box(rng, 2, 0.5, 1.5);
    const auto s = abstract_to_saturation(base, MergePolicy::for_box(box));
    if (s.fully_refined()) continue;
    const auto r = refine_split(s, box.center(), 10000);
    EXPECT_TRUE(r.fully_refined());
    for (int k = 0; k < 20; ++k) {
      const Vector x = random_point(rng, box);
      EXPECT_NEAR(evaluate_scalar(r.network(), x), evaluate_scalar(base->network, x), 1e-9);
    }
  }
}

// Saturated sizes are capped by both the original width and the four categories.
TEST(Abstraction, SaturationSizes) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const Network net = random_small_net(rng, 2, 4, 6);
    const auto s = abstract_to_saturation(categorize(net), MergePolicy{true});
    const auto orig = net.hidden_sizes();
    const auto abs = s.hidden_sizes();
    for (std::size_t i = 0; i < orig.size(); ++i) EXPECT_LE(abs[i], std::min<std::size_t>(orig[i] * 4, 4));
    // groups still partition the categorized layer
    for (std::size_t li = 0; li < s.groups().size(); ++li) {
      std::size_t members = 0;
      for (const auto& g : s.groups()[li]) members += g.size();
      EXPECT_EQ(members, s.base().network.layer(li).size());
    }
  }
}

// Over-approximation for random merge sequences, and the refinement order
// base <= refined <= previous on every step down to the identity.
TEST(Abstraction, RandomMergesAndSplitsKeepTheOrder) {
  Rng rng(77);
  std::size_t checked = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = rng.integer(1, 3);
    const Network net = random_small_net(rng, n, 3, 5);
    const bool nonneg = rng.coin();
    const InputBox box = nonneg ? random_box(rng, n, 1.0, 2.0) : random_box(rng, n);
    const auto base = categorize(net);
    AbstractionState s = AbstractionState::identity(base, MergePolicy::for_box(box));
    const std::size_t merges = rng.integer(1, 6);
    for (std::size_t m = 0; m < merges && random_merge(rng, s);) ++m;

    std::vector<Vector> xs;
    for (int k = 0; k < 100; ++k) xs.push_back(random_point(rng, box));
    for (const Vector& x : xs) EXPECT_GE(evaluate_scalar(s.network(), x), evaluate_scalar(net, x) - 1e-9);

    while (!s.fully_refined()) {
      const std::size_t excess = s.merge_excess();
      const AbstractionState r = refine_split(s, xs[rng.integer(0, xs.size() - 1)], rng.integer(1, 2));
      EXPECT_LT(r.merge_excess(), excess);
      for (const Vector& x : xs) {
        const double b = evaluate_scalar(base->network, x);
        const double nr = evaluate_scalar(r.network(), x);
        const double old = evaluate_scalar(s.network(), x);
        EXPECT_GE(nr, b - 1e-9);
        EXPECT_LE(nr, old + 1e-9);
        ++checked;
      }
      s = r;
    }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(Abstraction, RefinementScoresPreferTheWorstConstituent) {
  // Two pos/inc neurons merged; at x = 1 the large-weight neuron matches the
  // aggregate, the small one is overstated, so it is split first.
  Layer l0{Matrix::from_rows({{1.0}}), {0.0}, Activation::Relu};
  Layer l1{Matrix::from_rows({{4.0}, {1.0}, {2.0}}), {0.0, 0.0, 0.0}, Activation::Relu};
  Layer out{Matrix::from_rows({{1.0, 1.0, 1.0}}), {0.0}, Activation::Identity};
  const auto base = categorize(Network(1, {l0, l1, out}));
  const auto s = abstract_to_saturation(base, MergePolicy{});
  const auto scores = refinement_scores(s, Vector{1.0});
  EXPECT_DOUBLE_EQ(scores[1][0], 0.0);
  EXPECT_DOUBLE_EQ(scores[1][1], 3.0);
  EXPECT_DOUBLE_EQ(scores[1][2], 2.0);
  const auto r = refine_split(s, Vector{1.0}, 1);
  EXPECT_EQ(r.groups()[1], (std::vector<std::vector<std::size_t>>{{0, 2}, {1}}));
}
