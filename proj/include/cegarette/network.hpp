#pragma once

#include <cmath>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cegarette {

using Vector = std::vector<double>;

/// Dense row-major matrix. Rows index the neurons of a layer, columns the
/// neurons of the layer before it.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<Vector>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != cols) {
        throw ValidationError("ragged weight matrix: row " + std::to_string(r) + " has " +
                              std::to_string(rows[r].size()) + " entries, expected " +
                              std::to_string(cols));
      }
      for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  const Vector& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

enum class Activation { Relu, Identity };

struct Layer {
  Matrix weights;
  Vector biases;
  Activation activation = Activation::Relu;

  std::size_t size() const { return biases.size(); }
  std::size_t fan_in() const { return weights.cols(); }

  bool operator==(const Layer&) const = default;
};

/// Addresses a neuron by network layer (0 = first hidden layer) and position.
struct NeuronId {
  std::size_t layer = 0;
  std::size_t index = 0;

  auto operator<=>(const NeuronId&) const = default;
};

/// Axis-aligned input region.
struct InputBox {
  Vector lower;
  Vector upper;

  InputBox() = default;
  InputBox(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

  static InputBox point(const Vector& x) { return InputBox(x, x); }

  std::size_t size() const { return lower.size(); }

  bool nonnegative() const {
    for (double v : lower)
      if (v < 0.0) return false;
    return true;
  }

  bool contains(std::span<const double> x, double tolerance = 0.0) const {
    if (x.size() != size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < lower[i] - tolerance || x[i] > upper[i] + tolerance) return false;
    return true;
  }

  Vector center() const {
    Vector c(size());
    for (std::size_t i = 0; i < size(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
  }

  void validate() const {
    if (lower.size() != upper.size())
      throw ValidationError("input box bounds have different lengths");
    for (std::size_t i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw ValidationError("input box bound " + std::to_string(i) + " is not finite");
      if (lower[i] > upper[i]) {
        std::ostringstream os;
        os << "input box dimension " << i << " has lower " << lower[i] << " > upper " << upper[i];
        throw ValidationError(os.str());
      }
    }
  }

  bool operator==(const InputBox&) const = default;
};

/// Feed-forward ReLU network. Hidden layers apply ReLU, the last layer is
/// affine. Immutable once constructed.
class Network {
 public:
  Network(std::size_t input_size, std::vector<Layer> layers,
          std::optional<InputBox> input_domain = std::nullopt)
      : input_size_(input_size), layers_(std::move(layers)), input_domain_(std::move(input_domain)) {
    validate();
  }

  std::size_t input_size() const { return input_size_; }
  std::size_t output_size() const { return layers_.back().size(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_hidden_layers() const { return layers_.size() - 1; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_[i]; }
  const Layer& output_layer() const { return layers_.back(); }

  /// Declared valid input range, if the network file carries one.
  const std::optional<InputBox>& input_domain() const { return input_domain_; }

  std::vector<std::size_t> hidden_sizes() const {
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) sizes.push_back(layers_[i].size());
    return sizes;
  }

  std::size_t total_hidden() const {
    std::size_t n = 0;
    for (std::size_t s : hidden_sizes()) n += s;
    return n;
  }

  bool operator==(const Network&) const = default;

 private:
  void validate() const {
    if (input_size_ == 0) throw ValidationError("network input size must be positive");
    if (layers_.empty()) throw ValidationError("network has no layers");
    std::size_t prev = input_size_;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      const std::string where = "layer " + std::to_string(i) + ": ";
      if (l.size() == 0) throw ValidationError(where + "layer is empty");
      if (l.weights.rows() != l.size())
        throw ValidationError(where + "weight rows (" + std::to_string(l.weights.rows()) +
                              ") differ from bias count (" + std::to_string(l.size()) + ")");
      if (l.weights.cols() != prev)
        throw ValidationError(where + "weight columns (" + std::to_string(l.weights.cols()) +
                              ") differ from previous layer size (" + std::to_string(prev) + ")");
      const bool last = i + 1 == layers_.size();
      if (last && l.activation != Activation::Identity)
        throw ValidationError(where + "output layer must be affine");
      if (!last && l.activation != Activation::Relu)
        throw ValidationError(where + "hidden layers must use ReLU");
      for (double w : l.weights.data())
        if (!std::isfinite(w)) throw ValidationError(where + "non-finite weight");
      for (double b : l.biases)
        if (!std::isfinite(b)) throw ValidationError(where + "non-finite bias");
      prev = l.size();
    }
    if (input_domain_ && input_domain_->size() != input_size_)
      throw ValidationError("input domain length differs from input size");
  }

  std::size_t input_size_;
  std::vector<Layer> layers_;
  std::optional<InputBox> input_domain_;
};

/// Output constraint y > threshold.
struct OutputProperty {
  double threshold = 0.0;

  bool operator==(const OutputProperty&) const = default;
};

/// Verification query <N, P, Q>: SAT iff some x in `input` has N(x) > threshold.
struct Query {
  Network network;
  InputBox input;
  OutputProperty output;

  Query(Network net, InputBox box, OutputProperty out)
      : network(std::move(net)), input(std::move(box)), output(out) {
    if (network.output_size() != 1)
      throw ValidationError("query network must have exactly one output, got " +
                            std::to_string(network.output_size()));
    if (input.size() != network.input_size())
      throw ValidationError("input box has " + std::to_string(input.size()) +
                            " dimensions, network expects " + std::to_string(network.input_size()));
    if (!std::isfinite(output.threshold)) throw ValidationError("output threshold is not finite");
  }
};

/// Per-layer values of one forward pass.
struct Trace {
  std::vector<Vector> pre;
  std::vector<Vector> post;
};

inline Trace trace(const Network& net, std::span<const double> x) {
  if (x.size() != net.input_size())
    throw InputError("input has " + std::to_string(x.size()) + " entries, network expects " +
                     std::to_string(net.input_size()));
  Trace t;
  t.pre.reserve(net.num_layers());
  t.post.reserve(net.num_layers());
  std::span<const double> prev = x;
  for (const Layer& layer : net.layers()) {
    Vector pre(layer.size());
    for (std::size_t j = 0; j < layer.size(); ++j) {
      double acc = layer.biases[j];
      auto row = layer.weights.row(j);
      for (std::size_t k = 0; k < row.size(); ++k) acc += row[k] * prev[k];
      pre[j] = acc;
    }
    Vector post = pre;
    if (layer.activation == Activation::Relu)
      for (double& v : post) v = v > 0.0 ? v : 0.0;
    t.pre.push_back(std::move(pre));
    t.post.push_back(std::move(post));
    prev = t.post.back();
  }
  return t;
}

inline Vector evaluate(const Network& net, std::span<const double> x) {
  return std::move(trace(net, x).post.back());
}

/// Single-output convenience.
inline double evaluate_scalar(const Network& net, std::span<const double> x) {
  return evaluate(net, x).front();
}

}  // namespace cegarette
