#pragma once

// Shared fixtures and the independent reference oracle used by the suites.
//
// The oracle decides a query by enumerating every ReLU phase pattern and
// maximizing the output over each pattern's polytope by brute-force vertex
// enumeration. It shares no code with the solver beyond Network itself.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "cegarette/cegarette.hpp"

namespace cegarette::testing {

inline Network example_network() {
  Layer hidden{Matrix::from_rows({{10.0}, {1.0}}), {0.0, 0.0}, Activation::Relu};
  Layer out{Matrix::from_rows({{3.0, 4.0}}), {0.0}, Activation::Identity};
  return Network(1, {hidden, out});
}

inline Network merged_example_network() {
  Layer hidden{Matrix::from_rows({{10.0}}), {0.0}, Activation::Relu};
  Layer out{Matrix::from_rows({{7.0}}), {0.0}, Activation::Identity};
  return Network(1, {hidden, out});
}

inline Query example_query() { return Query(example_network(), InputBox({20.0}, {21.0}), OutputProperty{800.0}); }

/// Single-output net with up to `max_layers` hidden layers of up to
/// `max_width` neurons; roughly one weight in ten is zeroed.
inline Network random_small_net(Rng& rng, std::size_t inputs, std::size_t max_layers, std::size_t max_width,
                                double zero_prob = 0.1) {
  std::vector<std::size_t> hidden(rng.integer(1, max_layers));
  for (auto& w : hidden) w = rng.integer(1, max_width);
  Network net = random_network(rng, inputs, hidden, 1, 0.5);
  std::vector<Layer> layers = net.layers();
  for (Layer& l : layers)
    for (std::size_t r = 0; r < l.weights.rows(); ++r)
      for (std::size_t c = 0; c < l.weights.cols(); ++c)
        if (rng.coin(zero_prob)) l.weights(r, c) = 0.0;
  return Network(inputs, std::move(layers));
}

/// Net whose hidden neuron count never exceeds `max_hidden`.
inline Network random_bounded_net(Rng& rng, std::size_t inputs, std::size_t max_hidden) {
  const std::size_t layers = rng.integer(1, 2);
  std::vector<std::size_t> hidden;
  std::size_t left = max_hidden;
  for (std::size_t i = 0; i < layers && left > 0; ++i) {
    const std::size_t cap = i + 1 == layers ? left : std::max<std::size_t>(1, left - 1);
    hidden.push_back(rng.integer(1, std::min<std::size_t>(cap, 6)));
    left -= hidden.back();
  }
  return random_network(rng, inputs, hidden, 1, 0.5);
}

inline InputBox random_box(Rng& rng, std::size_t n, double centre_lo = -1.0, double centre_hi = 1.0) {
  Vector lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = rng.uniform(centre_lo, centre_hi);
    const double r = rng.uniform(0.05, 1.0);
    lo[i] = c - r;
    hi[i] = c + r;
  }
  return InputBox(lo, hi);
}

/// Threshold drawn around sampled outputs so suites mix SAT and UNSAT.
inline double random_threshold(Rng& rng, const Network& net, const InputBox& box) {
  double lo = evaluate_scalar(net, box.center()), hi = lo;
  for (int k = 0; k < 64; ++k) {
    const double y = evaluate_scalar(net, random_point(rng, box));
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  const double span = std::max(hi - lo, 1e-3);
  return rng.uniform(lo + 0.25 * span, hi + 0.5 * span);
}

namespace oracle {

// Row g . x <= h.
struct HalfSpace {
  Vector g;
  double h;
};

// Solves the square system by Gaussian elimination with partial pivoting.
inline std::optional<Vector> solve_square(std::vector<Vector> a, Vector b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

/// max objective . x over the bounded polytope, by visiting every vertex.
/// Returns nullopt for an empty polytope.
inline std::optional<double> max_by_vertices(const Vector& objective, const std::vector<HalfSpace>& rows,
                                             Vector* argmax = nullptr) {
  const std::size_t n = objective.size();
  const std::size_t m = rows.size();
  std::optional<double> best;
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  if (m < n) return std::nullopt;
  while (true) {
    std::vector<Vector> a;
    Vector b;
    for (std::size_t i : pick) {
      a.push_back(rows[i].g);
      b.push_back(rows[i].h);
    }
    if (auto x = solve_square(a, b)) {
      bool ok = true;
      for (const HalfSpace& r : rows) {
        double lhs = 0.0, mag = std::abs(r.h);
        for (std::size_t i = 0; i < n; ++i) {
          lhs += r.g[i] * (*x)[i];
          mag += std::abs(r.g[i] * (*x)[i]);
        }
        if (lhs > r.h + 1e-9 * (1.0 + mag)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += objective[i] * (*x)[i];
        if (!best || v > *best) {
          best = v;
          if (argmax) *argmax = *x;
        }
      }
    }
    // next combination
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == m - n + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
  return best;
}

inline std::vector<HalfSpace> box_rows(const InputBox& box) {
  std::vector<HalfSpace> rows;
  for (std::size_t i = 0; i < box.size(); ++i) {
    Vector e(box.size(), 0.0);
    e[i] = 1.0;
    rows.push_back({e, box.upper[i]});
    e[i] = -1.0;
    rows.push_back({e, -box.lower[i]});
  }
  return rows;
}

/// Maximum of N over the box across all phase patterns, or nullopt if no
/// pattern is realizable (cannot happen for a nonempty box).
inline std::optional<double> max_output(const Network& net, const InputBox& box) {
  const std::size_t n = net.input_size();
  const std::size_t h = net.total_hidden();
  std::optional<double> best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << h); ++mask) {
    std::vector<HalfSpace> rows = box_rows(box);
    // value of each previous-layer neuron as (coeffs, constant)
    std::vector<std::pair<Vector, double>> prev;
    for (std::size_t i = 0; i < n; ++i) {
      Vector e(n, 0.0);
      e[i] = 1.0;
      prev.push_back({e, 0.0});
    }
    std::size_t bit = 0;
    std::pair<Vector, double> out;
    for (std::size_t li = 0; li < net.num_layers(); ++li) {
      const Layer& l = net.layer(li);
      std::vector<std::pair<Vector, double>> cur;
      for (std::size_t j = 0; j < l.size(); ++j) {
        Vector g(n, 0.0);
        double c = l.biases[j];
        for (std::size_t k = 0; k < l.fan_in(); ++k) {
          for (std::size_t i = 0; i < n; ++i) g[i] += l.weights(j, k) * prev[k].first[i];
          c += l.weights(j, k) * prev[k].second;
        }
        if (li + 1 == net.num_layers()) {
          out = {g, c};
          continue;
        }
        const bool active = (mask >> bit++) & 1U;
        if (active) {
          Vector neg(n);
          for (std::size_t i = 0; i < n; ++i) neg[i] = -g[i];
          rows.push_back({neg, c});  // g.x + c >= 0
          cur.push_back({g, c});
        } else {
          rows.push_back({g, -c});  // g.x + c <= 0
          cur.push_back({Vector(n, 0.0), 0.0});
        }
      }
      prev = std::move(cur);
    }
    if (auto v = max_by_vertices(out.first, rows)) {
      const double val = *v + out.second;
      if (!best || val > *best) best = val;
    }
  }
  return best;
}

/// SAT iff some x in the box reaches c + epsilon.
inline Status decide(const Query& q, double epsilon = 1e-6) {
  const auto m = max_output(q.network, q.input);
  return m && *m >= q.output.threshold + epsilon ? Status::Sat : Status::Unsat;
}

}  // namespace oracle
}  // namespace cegarette::testing
