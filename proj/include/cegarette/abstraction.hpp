#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "network.hpp"
#include "preprocess.hpp"

namespace cegarette {

/// Which hidden layers may have neurons merged. Incoming weights are
/// aggregated with max/min, which over-approximates only when the source
/// values are nonnegative. That always holds behind a ReLU, but the first
/// hidden layer reads raw inputs, so it is mergeable only on a nonnegative box.
struct MergePolicy {
  bool merge_first_hidden_layer = false;

  static MergePolicy for_box(const InputBox& box) { return MergePolicy{box.nonnegative()}; }

  bool mergeable(std::size_t layer) const { return layer > 0 || merge_first_hidden_layer; }
};

/// A partition of the categorized network's hidden neurons into groups, one
/// abstract neuron per group, plus the abstract network built from it.
///
/// The abstract network is a pure function of the partition. For an abstract
/// neuron g and a categorized source neuron k, the aggregated weight is
/// max_{m in g} W[m][k] when g is inc and min when g is dec; the abstract edge
/// from source group h to g is the sum of those over k in h. Biases are
/// aggregated like incoming weights; the output row sums over each group.
/// Splitting any group therefore never raises the abstract output.
class AbstractionState {
 public:
  using Group = std::vector<std::size_t>;  // sorted categorized indices

  /// Identity abstraction: every neuron is its own group.
  static AbstractionState identity(std::shared_ptr<const CategorizedNetwork> base, MergePolicy policy) {
    std::vector<std::vector<Group>> groups(base->network.num_hidden_layers());
    for (std::size_t li = 0; li < groups.size(); ++li)
      for (std::size_t j = 0; j < base->network.layer(li).size(); ++j) groups[li].push_back({j});
    return AbstractionState(std::move(base), policy, std::move(groups));
  }

  AbstractionState(std::shared_ptr<const CategorizedNetwork> base, MergePolicy policy,
                   std::vector<std::vector<Group>> groups)
      : base_(std::move(base)), policy_(policy), groups_(std::move(groups)), net_(build()) {}

  const Network& network() const { return net_; }
  const CategorizedNetwork& base() const { return *base_; }
  const std::shared_ptr<const CategorizedNetwork>& base_ptr() const { return base_; }
  const MergePolicy& policy() const { return policy_; }

  /// groups()[layer][abstract index] lists categorized neuron indices.
  const std::vector<std::vector<Group>>& groups() const { return groups_; }

  /// Abstract neuron currently holding a categorized neuron.
  std::size_t group_of(NeuronId id) const {
    const auto& layer = groups_[id.layer];
    for (std::size_t g = 0; g < layer.size(); ++g)
      if (std::binary_search(layer[g].begin(), layer[g].end(), id.index)) return g;
    throw PreconditionError("neuron is not part of any group");
  }

  const Category& category(std::size_t layer, std::size_t group) const {
    return base_->categories[layer][groups_[layer][group].front()];
  }

  /// Sum over groups of (|g| - 1). Each refinement lowers it by at least one.
  std::size_t merge_excess() const {
    std::size_t e = 0;
    for (const auto& layer : groups_)
      for (const auto& g : layer) e += g.size() - 1;
    return e;
  }

  bool fully_refined() const { return merge_excess() == 0; }

  std::vector<std::size_t> hidden_sizes() const {
    std::vector<std::size_t> s;
    for (const auto& layer : groups_) s.push_back(layer.size());
    return s;
  }

  /// Aggregated weight of categorized source k into abstract neuron g of layer li.
  double member_weight(std::size_t li, std::size_t g, std::size_t k) const {
    const Layer& layer = base_->network.layer(li);
    const Group& members = groups_[li][g];
    const bool inc = category(li, g).direction == Direction::Inc;
    double agg = layer.weights(members.front(), k);
    for (std::size_t m : members) agg = inc ? std::max(agg, layer.weights(m, k)) : std::min(agg, layer.weights(m, k));
    return agg;
  }

 private:
  Network build() const {
    const Network& cat = base_->network;
    const std::size_t hidden = cat.num_hidden_layers();
    validate_groups();
    std::vector<Layer> layers;
    layers.reserve(cat.num_layers());
    for (std::size_t li = 0; li <= hidden; ++li) {
      const Layer& src = cat.layer(li);
      const bool output = li == hidden;
      // Source grouping: inputs stay singletons.
      std::vector<std::size_t> source_group(src.fan_in());
      std::size_t num_sources = src.fan_in();
      if (li > 0) {
        num_sources = groups_[li - 1].size();
        for (std::size_t h = 0; h < groups_[li - 1].size(); ++h)
          for (std::size_t k : groups_[li - 1][h]) source_group[k] = h;
      } else {
        std::iota(source_group.begin(), source_group.end(), std::size_t{0});
      }

      Layer out;
      out.activation = src.activation;
      const std::size_t rows = output ? src.size() : groups_[li].size();
      out.weights = Matrix(rows, num_sources);
      out.biases.assign(rows, 0.0);
      for (std::size_t g = 0; g < rows; ++g) {
        if (output) {
          for (std::size_t k = 0; k < src.fan_in(); ++k) out.weights(g, source_group[k]) += src.weights(g, k);
          out.biases[g] = src.biases[g];
          continue;
        }
        const Group& members = groups_[li][g];
        const bool inc = category(li, g).direction == Direction::Inc;
        for (std::size_t k = 0; k < src.fan_in(); ++k) out.weights(g, source_group[k]) += member_weight(li, g, k);
        double b = src.biases[members.front()];
        for (std::size_t m : members) b = inc ? std::max(b, src.biases[m]) : std::min(b, src.biases[m]);
        out.biases[g] = b;
      }
      layers.push_back(std::move(out));
    }
    return Network(cat.input_size(), std::move(layers), cat.input_domain());
  }

  void validate_groups() const {
    const Network& cat = base_->network;
    if (groups_.size() != cat.num_hidden_layers())
      throw PreconditionError("group list does not match hidden layer count");
    for (std::size_t li = 0; li < groups_.size(); ++li) {
      std::vector<int> seen(cat.layer(li).size(), 0);
      for (const Group& g : groups_[li]) {
        if (g.empty()) throw PreconditionError("empty abstraction group");
        if (!std::is_sorted(g.begin(), g.end())) throw PreconditionError("unsorted abstraction group");
        if (g.size() > 1 && !policy_.mergeable(li))
          throw PreconditionError("layer " + std::to_string(li) + " may not be merged under this input box");
        const Category& c = base_->categories[li][g.front()];
        for (std::size_t m : g) {
          if (m >= seen.size()) throw PreconditionError("group member out of range");
          if (++seen[m] > 1) throw PreconditionError("neuron appears in two groups");
          if (!(base_->categories[li][m] == c)) throw PreconditionError("group mixes categories");
        }
      }
      for (int s : seen)
        if (s != 1) throw PreconditionError("groups do not cover every neuron");
    }
  }

  std::shared_ptr<const CategorizedNetwork> base_;
  MergePolicy policy_;
  std::vector<std::vector<Group>> groups_;
  Network net_;
};

namespace detail {

inline void sort_groups(std::vector<AbstractionState::Group>& layer) {
  std::sort(layer.begin(), layer.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

}  // namespace detail

/// Unions the groups holding categorized neurons a and b.
inline AbstractionState merge_pair(const AbstractionState& state, NeuronId a, NeuronId b) {
  if (a.layer != b.layer) throw PreconditionError("merge_pair: neurons lie in different layers");
  if (a.layer >= state.groups().size()) throw PreconditionError("merge_pair: not a hidden layer");
  if (!state.policy().mergeable(a.layer))
    throw PreconditionError("merge_pair: first hidden layer is not mergeable for this input box");
  if (!(state.base().category(a) == state.base().category(b)))
    throw PreconditionError("merge_pair: category mismatch");
  const std::size_t ga = state.group_of(a);
  const std::size_t gb = state.group_of(b);
  if (ga == gb) throw PreconditionError("merge_pair: neurons already share a group");

  auto groups = state.groups();
  auto& layer = groups[a.layer];
  AbstractionState::Group merged;
  std::merge(layer[ga].begin(), layer[ga].end(), layer[gb].begin(), layer[gb].end(), std::back_inserter(merged));
  layer[std::min(ga, gb)] = std::move(merged);
  layer.erase(layer.begin() + static_cast<std::ptrdiff_t>(std::max(ga, gb)));
  detail::sort_groups(layer);
  return AbstractionState(state.base_ptr(), state.policy(), std::move(groups));
}

/// Merges every mergeable layer down to one abstract neuron per category.
/// Because the abstract network depends only on the partition, this equals
/// any sequence of pairwise merges that reaches the same partition.
inline AbstractionState abstract_to_saturation(std::shared_ptr<const CategorizedNetwork> base,
                                               MergePolicy policy) {
  const std::size_t hidden = base->network.num_hidden_layers();
  std::vector<std::vector<AbstractionState::Group>> groups(hidden);
  for (std::size_t li = 0; li < hidden; ++li) {
    const auto& cats = base->categories[li];
    if (!policy.mergeable(li)) {
      for (std::size_t j = 0; j < cats.size(); ++j) groups[li].push_back({j});
      continue;
    }
    for (const Category& c : detail::kBucketOrder) {
      AbstractionState::Group g;
      for (std::size_t j = 0; j < cats.size(); ++j)
        if (cats[j] == c) g.push_back(j);
      if (!g.empty()) groups[li].push_back(std::move(g));
    }
    detail::sort_groups(groups[li]);
  }
  return AbstractionState(std::move(base), policy, std::move(groups));
}

/// Per-constituent refinement score at a spurious input: summed absolute
/// difference between the neuron's true outgoing contributions and the
/// share the abstract network attributes to it. Singleton groups score 0.
inline std::vector<std::vector<double>> refinement_scores(const AbstractionState& state,
                                                          std::span<const double> x0) {
  const Network& cat = state.base().network;
  const Trace concrete = trace(cat, x0);
  const Trace abstract = trace(state.network(), x0);
  const std::size_t hidden = cat.num_hidden_layers();

  std::vector<std::vector<double>> scores(hidden);
  for (std::size_t li = 0; li < hidden; ++li) {
    scores[li].assign(cat.layer(li).size(), 0.0);
    const Layer& next = cat.layer(li + 1);
    const bool next_is_output = li + 1 == hidden;
    std::vector<std::size_t> target_group(next.size());
    if (!next_is_output)
      for (std::size_t G = 0; G < state.groups()[li + 1].size(); ++G)
        for (std::size_t t : state.groups()[li + 1][G]) target_group[t] = G;

    for (std::size_t g = 0; g < state.groups()[li].size(); ++g) {
      const auto& members = state.groups()[li][g];
      if (members.size() < 2) continue;
      const double v_abstract = abstract.post[li][g];
      for (std::size_t m : members) {
        const double v_m = concrete.post[li][m];
        double s = 0.0;
        for (std::size_t t = 0; t < next.size(); ++t) {
          const double w = next.weights(t, m);
          const double share = next_is_output ? w : state.member_weight(li + 1, target_group[t], m);
          s += std::abs(w * v_m - share * v_abstract);
        }
        scores[li][m] = s;
      }
    }
  }
  return scores;
}

/// Extracts up to k constituents from non-singleton groups into their own
/// abstract neurons, highest refinement score first; ties go to the lower
/// (layer, index). Throws CannotRefine when every group is a singleton.
inline AbstractionState refine_split(const AbstractionState& state, std::span<const double> x0, std::size_t k) {
  if (k == 0) throw PreconditionError("refine_split: batch size must be positive");
  if (state.fully_refined()) throw CannotRefine("abstraction is already fully refined");
  const auto scores = refinement_scores(state, x0);

  struct Candidate {
    double score;
    NeuronId id;
  };
  std::vector<Candidate> candidates;
  for (std::size_t li = 0; li < state.groups().size(); ++li)
    for (const auto& g : state.groups()[li])
      if (g.size() > 1)
        for (std::size_t m : g) candidates.push_back({scores[li][m], {li, m}});
  std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });

  auto groups = state.groups();
  std::size_t done = 0;
  for (const Candidate& c : candidates) {
    if (done == k) break;
    auto& layer = groups[c.id.layer];
    auto it = std::find_if(layer.begin(), layer.end(), [&](const auto& g) {
      return std::binary_search(g.begin(), g.end(), c.id.index);
    });
    if (it->size() < 2) continue;
    it->erase(std::find(it->begin(), it->end(), c.id.index));
    layer.push_back({c.id.index});
    detail::sort_groups(layer);
    ++done;
  }
  return AbstractionState(state.base_ptr(), state.policy(), std::move(groups));
}

}  // namespace cegarette
