#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "network.hpp"

namespace cegarette {

/// Branching decision for one hidden ReLU.
enum class Phase { Unknown, Active, Inactive };

/// phases[layer][index] for hidden layers; an empty assignment fixes nothing.
using PhaseAssignment = std::vector<std::vector<Phase>>;

inline PhaseAssignment unknown_phases(const Network& net) {
  PhaseAssignment p;
  for (std::size_t s : net.hidden_sizes()) p.emplace_back(s, Phase::Unknown);
  return p;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double v, double slack = 0.0) const { return v >= lo - slack && v <= hi + slack; }
  bool within(const Interval& outer, double slack = 0.0) const {
    return lo >= outer.lo - slack && hi <= outer.hi + slack;
  }
  bool operator==(const Interval&) const = default;
};

struct LayerBounds {
  std::vector<Interval> pre;
  std::vector<Interval> post;
};

/// Concrete per-neuron intervals, indexed like the network's layers.
struct BoundsMap {
  std::vector<LayerBounds> layers;

  const Interval& pre(NeuronId id) const { return layers[id.layer].pre[id.index]; }
  const Interval& post(NeuronId id) const { return layers[id.layer].post[id.index]; }
  const Interval& output() const { return layers.back().post.front(); }
};

/// c . x + constant over the network inputs.
struct AffineExpr {
  Vector coeffs;
  double constant = 0.0;

  static AffineExpr zero(std::size_t n) { return {Vector(n, 0.0), 0.0}; }
  static AffineExpr constant_of(std::size_t n, double v) { return {Vector(n, 0.0), v}; }

  double eval(std::span<const double> x) const {
    double acc = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i) acc += coeffs[i] * x[i];
    return acc;
  }
  // Sign-split concretization over a box.
  double min_over(const InputBox& box) const {
    double acc = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      acc += coeffs[i] * (coeffs[i] >= 0.0 ? box.lower[i] : box.upper[i]);
    return acc;
  }
  double max_over(const InputBox& box) const {
    double acc = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      acc += coeffs[i] * (coeffs[i] >= 0.0 ? box.upper[i] : box.lower[i]);
    return acc;
  }
  /// Box corner that maximizes the expression.
  Vector argmax_over(const InputBox& box) const {
    Vector x(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) x[i] = coeffs[i] >= 0.0 ? box.upper[i] : box.lower[i];
    return x;
  }
};

struct SymbolicLayer {
  std::vector<AffineExpr> pre_lower, pre_upper;
  std::vector<AffineExpr> post_lower, post_upper;
};

struct SymbolicBoundsMap {
  std::vector<SymbolicLayer> layers;
};

enum class BoundMethod { Ibp, Sbt };

inline std::string to_string(BoundMethod m) { return m == BoundMethod::Ibp ? "ibp" : "sbt"; }

inline BoundMethod parse_bound_method(const std::string& s) {
  if (s == "ibp") return BoundMethod::Ibp;
  if (s == "sbt") return BoundMethod::Sbt;
  throw InputError("unknown bound method '" + s + "' (expected ibp or sbt)");
}

namespace detail {

inline void check_box(const Network& net, const InputBox& box) {
  if (box.size() != net.input_size())
    throw InputError("input box has " + std::to_string(box.size()) + " dimensions, network expects " +
                     std::to_string(net.input_size()));
}

// Interval image of one affine row over source intervals.
inline Interval affine_interval(std::span<const double> row, double bias, std::span<const Interval> src) {
  double lo = bias, hi = bias;
  for (std::size_t k = 0; k < row.size(); ++k) {
    const double w = row[k];
    if (w >= 0.0) {
      lo += w * src[k].lo;
      hi += w * src[k].hi;
    } else {
      lo += w * src[k].hi;
      hi += w * src[k].lo;
    }
  }
  return {lo, hi};
}

}  // namespace detail

/// Interval bound propagation: forward interval arithmetic, layer by layer.
inline BoundsMap ibp(const Network& net, const InputBox& box) {
  detail::check_box(net, box);
  std::vector<Interval> prev(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) prev[i] = {box.lower[i], box.upper[i]};
  BoundsMap out;
  for (const Layer& layer : net.layers()) {
    LayerBounds lb;
    for (std::size_t j = 0; j < layer.size(); ++j) {
      Interval pre = detail::affine_interval(layer.weights.row(j), layer.biases[j], prev);
      lb.pre.push_back(pre);
      if (layer.activation == Activation::Relu)
        lb.post.push_back({std::max(pre.lo, 0.0), std::max(pre.hi, 0.0)});
      else
        lb.post.push_back(pre);
    }
    prev = lb.post;
    out.layers.push_back(std::move(lb));
  }
  return out;
}

struct SbtResult {
  SymbolicBoundsMap symbolic;
  BoundsMap concrete;
  /// False when the fixed phases contradict the bounds (empty region).
  bool feasible = true;
};

/// Symbolic bound tightening. Each neuron carries one affine lower and one
/// affine upper expression over the inputs. Stable-active ReLUs pass both
/// through, stable-inactive ones become zero, unstable ones drop to the
/// constants 0 and the concrete upper bound. Concrete bounds are the
/// concretized expressions intersected with interval propagation of the
/// previous layer's concrete bounds, so they are never looser than ibp().
///
/// With `phases`, an Active neuron is constrained to pre >= 0 and an Inactive
/// one to pre <= 0; bounds then hold over the box restricted to those
/// constraints.
inline SbtResult sbt(const Network& net, const InputBox& box, const PhaseAssignment& phases = {}) {
  detail::check_box(net, box);
  const std::size_t n = net.input_size();
  SbtResult res;

  std::vector<AffineExpr> prev_lower, prev_upper;
  std::vector<Interval> prev_bounds(n);
  for (std::size_t i = 0; i < n; ++i) {
    AffineExpr e = AffineExpr::zero(n);
    e.coeffs[i] = 1.0;
    prev_lower.push_back(e);
    prev_upper.push_back(e);
    prev_bounds[i] = {box.lower[i], box.upper[i]};
  }

  for (std::size_t li = 0; li < net.num_layers(); ++li) {
    const Layer& layer = net.layer(li);
    SymbolicLayer sl;
    LayerBounds lb;
    for (std::size_t j = 0; j < layer.size(); ++j) {
      AffineExpr lo = AffineExpr::constant_of(n, layer.biases[j]);
      AffineExpr up = AffineExpr::constant_of(n, layer.biases[j]);
      auto row = layer.weights.row(j);
      for (std::size_t k = 0; k < row.size(); ++k) {
        const double w = row[k];
        if (w == 0.0) continue;
        const AffineExpr& for_lo = w > 0.0 ? prev_lower[k] : prev_upper[k];
        const AffineExpr& for_up = w > 0.0 ? prev_upper[k] : prev_lower[k];
        for (std::size_t i = 0; i < n; ++i) {
          lo.coeffs[i] += w * for_lo.coeffs[i];
          up.coeffs[i] += w * for_up.coeffs[i];
        }
        lo.constant += w * for_lo.constant;
        up.constant += w * for_up.constant;
      }
      const Interval by_intervals = detail::affine_interval(row, layer.biases[j], prev_bounds);
      Interval pre{std::max(lo.min_over(box), by_intervals.lo), std::min(up.max_over(box), by_intervals.hi)};

      const Phase phase = (li < phases.size() && j < phases[li].size()) ? phases[li][j] : Phase::Unknown;
      if (layer.activation == Activation::Relu) {
        if (phase == Phase::Active) pre.lo = std::max(pre.lo, 0.0);
        if (phase == Phase::Inactive) pre.hi = std::min(pre.hi, 0.0);
      }
      if (pre.lo > pre.hi) {
        // Contradictory constraints; keep a degenerate interval for shape.
        res.feasible = false;
        pre.hi = pre.lo;
      }

      Interval post = pre;
      AffineExpr post_lo = lo, post_up = up;
      if (layer.activation == Activation::Relu) {
        if (pre.lo >= 0.0) {
          // stable active: identity
        } else if (pre.hi <= 0.0) {
          post = {0.0, 0.0};
          post_lo = post_up = AffineExpr::zero(n);
        } else {
          post = {0.0, pre.hi};
          post_lo = AffineExpr::zero(n);
          post_up = AffineExpr::constant_of(n, pre.hi);
        }
      }
      sl.pre_lower.push_back(std::move(lo));
      sl.pre_upper.push_back(std::move(up));
      sl.post_lower.push_back(post_lo);
      sl.post_upper.push_back(post_up);
      lb.pre.push_back(pre);
      lb.post.push_back(post);
    }
    prev_lower = sl.post_lower;
    prev_upper = sl.post_upper;
    prev_bounds = lb.post;
    res.symbolic.layers.push_back(std::move(sl));
    res.concrete.layers.push_back(std::move(lb));
  }
  return res;
}

inline BoundsMap compute_bounds(const Network& net, const InputBox& box, BoundMethod method) {
  return method == BoundMethod::Ibp ? ibp(net, box) : sbt(net, box).concrete;
}

inline Interval output_bounds(const Network& net, const InputBox& box, BoundMethod method) {
  return compute_bounds(net, box, method).output();
}

/// d = max(0, l_abstract - u_original): a certified lower bound on
/// abstract(x) - original(x) over the box.
inline double output_gap(const Network& abstract, const Network& original, const InputBox& box,
                         BoundMethod method) {
  if (abstract.output_size() != 1 || original.output_size() != 1)
    throw PreconditionError("output_gap needs single-output networks");
  if (abstract.input_size() != original.input_size())
    throw PreconditionError("output_gap needs networks over the same inputs");
  const double l = output_bounds(abstract, box, method).lo;
  const double u = output_bounds(original, box, method).hi;
  return std::max(0.0, l - u);
}

}  // namespace cegarette
