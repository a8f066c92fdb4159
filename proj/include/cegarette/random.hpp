#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "network.hpp"

namespace cegarette {

/// Seeded generator with platform-independent draws: std::mt19937_64 is
/// fully specified, the standard distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  /// Uniform integer in [lo, hi].
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(engine_() % (hi - lo + 1));
  }
  bool coin(double p = 0.5) { return unit() < p; }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Dense ReLU network with He-uniform weights and small biases.
inline Network random_network(Rng& rng, std::size_t input_size, const std::vector<std::size_t>& hidden,
                              std::size_t output_size, double bias_scale = 0.1) {
  std::vector<Layer> layers;
  std::size_t prev = input_size;
  std::vector<std::size_t> sizes = hidden;
  sizes.push_back(output_size);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    Layer l;
    l.activation = i + 1 == sizes.size() ? Activation::Identity : Activation::Relu;
    l.weights = Matrix(sizes[i], prev);
    const double a = std::sqrt(6.0 / static_cast<double>(prev));
    for (std::size_t r = 0; r < sizes[i]; ++r)
      for (std::size_t c = 0; c < prev; ++c) l.weights(r, c) = rng.uniform(-a, a);
    l.biases.resize(sizes[i]);
    for (double& b : l.biases) b = rng.uniform(-bias_scale, bias_scale);
    layers.push_back(std::move(l));
    prev = sizes[i];
  }
  return Network(input_size, std::move(layers));
}

inline Vector random_point(Rng& rng, const InputBox& box) {
  Vector x(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) x[i] = rng.uniform(box.lower[i], box.upper[i]);
  return x;
}

}  // namespace cegarette
