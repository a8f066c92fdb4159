#pragma once

#include <array>
#include <string>
#include <vector>

#include "network.hpp"

namespace cegarette {

enum class Sign { Pos, Neg };
enum class Direction { Inc, Dec };

/// pos/neg: sign shared by all outgoing edges.
/// inc/dec: whether raising the neuron's value raises or lowers the output.
struct Category {
  Sign sign = Sign::Pos;
  Direction direction = Direction::Inc;

  bool operator==(const Category&) const = default;
};

inline std::string to_string(const Category& c) {
  return std::string(c.sign == Sign::Pos ? "pos" : "neg") + "/" +
         (c.direction == Direction::Inc ? "inc" : "dec");
}

/// A network whose hidden neurons each carry exactly one category, together
/// with the map back to the neurons of the network it was derived from.
struct CategorizedNetwork {
  Network network;
  /// categories[layer][index], hidden layers only.
  std::vector<std::vector<Category>> categories;
  /// origin[layer][index]: index of the copied neuron in the original layer.
  std::vector<std::vector<std::size_t>> origin;

  const Category& category(NeuronId id) const { return categories[id.layer][id.index]; }
};

namespace detail {

// Bucket of an edge into a target of the given direction, keyed by the
// edge's weight sign. Zero weights fall to the positive bucket.
inline Category edge_bucket(Direction target, double w) {
  const bool pos = w >= 0.0;
  if (target == Direction::Inc) return pos ? Category{Sign::Pos, Direction::Inc} : Category{Sign::Neg, Direction::Dec};
  return pos ? Category{Sign::Pos, Direction::Dec} : Category{Sign::Neg, Direction::Inc};
}

constexpr std::array<Category, 4> kBucketOrder = {
    Category{Sign::Pos, Direction::Inc}, Category{Sign::Pos, Direction::Dec},
    Category{Sign::Neg, Direction::Inc}, Category{Sign::Neg, Direction::Dec}};

}  // namespace detail

/// Splits every hidden neuron into up to four categorized copies without
/// changing the network's function.
///
/// Works backward from the output neuron (fixed as inc). For a layer whose
/// successor is already categorized, each neuron's nonzero outgoing edges are
/// routed to the bucket determined by (target direction, weight sign); one
/// copy is created per nonempty bucket, and each copy receives the original
/// neuron's full incoming weights and bias. Copies in a bucket carry only
/// that bucket's outgoing edges, so their contributions sum to the original.
/// Neurons with no nonzero outgoing edge are dropped; a layer that would end
/// up empty keeps a single zero-output pos/inc copy of its first neuron.
inline CategorizedNetwork preprocess(const Network& net) {
  if (net.output_size() != 1)
    throw PreconditionError("preprocess requires a single-output network; reduce it first");

  const std::size_t hidden = net.num_hidden_layers();
  std::vector<std::vector<Category>> categories(hidden);
  std::vector<std::vector<std::size_t>> origin(hidden);
  std::vector<Layer> layers(net.num_layers());

  // Outgoing weights of the layer currently being split: rows are the
  // already-categorized successor neurons, columns the original neurons.
  Matrix outgoing = net.output_layer().weights;
  std::vector<Direction> successor_dirs{Direction::Inc};
  layers.back() = net.output_layer();

  for (std::size_t li = hidden; li-- > 0;) {
    const Layer& orig = net.layer(li);
    std::vector<Category> cats;
    std::vector<std::size_t> from;
    std::vector<std::size_t> bucket_of;  // per copy, index into kBucketOrder
    for (std::size_t j = 0; j < orig.size(); ++j) {
      std::array<bool, 4> used{};
      for (std::size_t t = 0; t < outgoing.rows(); ++t) {
        const double w = outgoing(t, j);
        if (w == 0.0) continue;
        const Category b = detail::edge_bucket(successor_dirs[t], w);
        for (std::size_t k = 0; k < 4; ++k)
          if (detail::kBucketOrder[k] == b) used[k] = true;
      }
      for (std::size_t k = 0; k < 4; ++k) {
        if (!used[k]) continue;
        cats.push_back(detail::kBucketOrder[k]);
        from.push_back(j);
        bucket_of.push_back(k);
      }
    }
    if (cats.empty()) {
      cats.push_back(detail::kBucketOrder[0]);
      from.push_back(0);
      bucket_of.push_back(0);
    }

    // Successor columns now point at copies.
    Layer& succ = layers[li + 1];
    Matrix succ_weights(outgoing.rows(), cats.size());
    for (std::size_t t = 0; t < outgoing.rows(); ++t) {
      for (std::size_t c = 0; c < cats.size(); ++c) {
        const double w = outgoing(t, from[c]);
        if (w != 0.0 && detail::edge_bucket(successor_dirs[t], w) == detail::kBucketOrder[bucket_of[c]])
          succ_weights(t, c) = w;
      }
    }
    succ.weights = std::move(succ_weights);

    // Copies inherit incoming weights; their columns are split next round.
    Layer split;
    split.activation = Activation::Relu;
    split.weights = Matrix(cats.size(), orig.fan_in());
    split.biases.resize(cats.size());
    for (std::size_t c = 0; c < cats.size(); ++c) {
      auto src = orig.weights.row(from[c]);
      std::copy(src.begin(), src.end(), split.weights.row(c).begin());
      split.biases[c] = orig.biases[from[c]];
    }
    outgoing = split.weights;
    layers[li] = std::move(split);

    successor_dirs.clear();
    for (const Category& c : cats) successor_dirs.push_back(c.direction);
    categories[li] = std::move(cats);
    origin[li] = std::move(from);
  }

  return CategorizedNetwork{Network(net.input_size(), std::move(layers), net.input_domain()),
                            std::move(categories), std::move(origin)};
}

/// Exact sign check of the category invariants on every edge. Returns an
/// empty string when they hold, otherwise a description of the first breach.
inline std::string check_categories(const CategorizedNetwork& cn) {
  const Network& net = cn.network;
  const std::size_t hidden = net.num_hidden_layers();
  for (std::size_t li = 0; li < hidden; ++li) {
    const Layer& next = net.layer(li + 1);
    for (std::size_t j = 0; j < net.layer(li).size(); ++j) {
      const Category& cat = cn.categories[li][j];
      for (std::size_t t = 0; t < next.size(); ++t) {
        const double w = next.weights(t, j);
        const Direction target = li + 1 == hidden ? Direction::Inc : cn.categories[li + 1][t].direction;
        const bool sign_ok = cat.sign == Sign::Pos ? w >= 0.0 : w <= 0.0;
        // inc: targets inc with w >= 0 or dec with w <= 0; dec is the dual.
        const bool same = target == cat.direction;
        const bool dir_ok = same ? w >= 0.0 : w <= 0.0;
        if (!sign_ok || !dir_ok)
          return "edge (" + std::to_string(li) + "," + std::to_string(j) + ") -> " +
                 std::to_string(t) + " weight " + std::to_string(w) + " breaks " + to_string(cat);
      }
    }
  }
  return {};
}

}  // namespace cegarette
