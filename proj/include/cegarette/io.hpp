#pragma once

// Network and query file formats.
//
//   network JSON: {"input_size": n,
//                  "layers": [{"weights": [[...]], "biases": [...],
//                              "activation": "relu" | "none"}],
//                  "input_domain": {"lower": [...], "upper": [...]}}   (optional)
//   query JSON:   {"input_lower": [...], "input_upper": [...], "output_threshold": c}
//   NNet:         the ACAS-Xu text format, read-only. Normalization constants
//                 in the header are parsed and ignored.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "network.hpp"

namespace cegarette::io {

using nlohmann::json;

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

inline const json& field(const json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) throw ParseError(ctx + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline double number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw ParseError(ctx + ": expected a number");
  return j.get<double>();
}

inline Vector number_array(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw ParseError(ctx + ": expected an array of numbers");
  Vector v;
  v.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v.push_back(number(j[i], ctx + "[" + std::to_string(i) + "]"));
  return v;
}

inline json box_to_json(const InputBox& box) {
  return json{{"lower", box.lower}, {"upper", box.upper}};
}

}  // namespace detail

inline json network_to_json(const Network& net) {
  json layers = json::array();
  for (const Layer& l : net.layers()) {
    json rows = json::array();
    for (std::size_t r = 0; r < l.weights.rows(); ++r) {
      auto row = l.weights.row(r);
      rows.push_back(Vector(row.begin(), row.end()));
    }
    layers.push_back({{"weights", rows},
                      {"biases", l.biases},
                      {"activation", l.activation == Activation::Relu ? "relu" : "none"}});
  }
  json j{{"input_size", net.input_size()}, {"layers", layers}};
  if (net.input_domain()) j["input_domain"] = detail::box_to_json(*net.input_domain());
  return j;
}

inline Network network_from_json(const json& j, const std::string& origin = "network") {
  using detail::field;
  const json& size = field(j, "input_size", origin);
  if (!size.is_number_integer() || size.get<long long>() <= 0)
    throw ParseError(origin + ": 'input_size' must be a positive integer");
  const json& layers_json = field(j, "layers", origin);
  if (!layers_json.is_array()) throw ParseError(origin + ": 'layers' must be an array");

  std::vector<Layer> layers;
  for (std::size_t i = 0; i < layers_json.size(); ++i) {
    const std::string ctx = origin + ": layers[" + std::to_string(i) + "]";
    const json& lj = layers_json[i];
    const json& wj = field(lj, "weights", ctx);
    if (!wj.is_array()) throw ParseError(ctx + ".weights: expected an array of rows");
    std::vector<Vector> rows;
    for (std::size_t r = 0; r < wj.size(); ++r)
      rows.push_back(detail::number_array(wj[r], ctx + ".weights[" + std::to_string(r) + "]"));
    Layer layer;
    try {
      layer.weights = Matrix::from_rows(rows);
    } catch (const ValidationError& e) {
      throw ValidationError(ctx + ": " + e.what());
    }
    layer.biases = detail::number_array(field(lj, "biases", ctx), ctx + ".biases");
    const json& act = field(lj, "activation", ctx);
    if (act == "relu")
      layer.activation = Activation::Relu;
    else if (act == "none")
      layer.activation = Activation::Identity;
    else
      throw ParseError(ctx + ".activation: expected \"relu\" or \"none\"");
    layers.push_back(std::move(layer));
  }

  std::optional<InputBox> domain;
  if (auto it = j.find("input_domain"); it != j.end()) {
    const std::string ctx = origin + ": input_domain";
    domain = InputBox(detail::number_array(field(*it, "lower", ctx), ctx + ".lower"),
                      detail::number_array(field(*it, "upper", ctx), ctx + ".upper"));
  }
  try {
    return Network(size.get<std::size_t>(), std::move(layers), std::move(domain));
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

inline Network parse_nnet(const std::string& text, const std::string& origin = "nnet");

inline Network load_network(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  if (path.extension() == ".nnet") return parse_nnet(text, path.string());
  return network_from_json(detail::parse_json(text, path.string()), path.string());
}

inline void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

inline void save_network(const Network& net, const std::filesystem::path& path) {
  write_json(network_to_json(net), path);
}

inline json query_to_json(const InputBox& box, const OutputProperty& out) {
  return json{{"input_lower", box.lower},
              {"input_upper", box.upper},
              {"output_threshold", out.threshold}};
}

/// Reads the input box and threshold of a query file.
inline std::pair<InputBox, OutputProperty> property_from_json(const json& j,
                                                              const std::string& origin) {
  using detail::field;
  Vector lo = detail::number_array(field(j, "input_lower", origin), origin + ": input_lower");
  Vector hi = detail::number_array(field(j, "input_upper", origin), origin + ": input_upper");
  double c = detail::number(field(j, "output_threshold", origin), origin + ": output_threshold");
  try {
    return {InputBox(std::move(lo), std::move(hi)), OutputProperty{c}};
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

inline std::pair<InputBox, OutputProperty> load_property(const std::filesystem::path& path) {
  return property_from_json(detail::parse_json(detail::read_file(path), path.string()),
                            path.string());
}

/// Loads a query file against an already-loaded network and checks arity.
inline Query load_query(const std::filesystem::path& path, const Network& net) {
  auto [box, out] = load_property(path);
  try {
    return Query(net, std::move(box), out);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline Query load_query(const std::filesystem::path& net_path,
                        const std::filesystem::path& prop_path) {
  return load_query(prop_path, load_network(net_path));
}

inline void save_query(const Query& q, const std::filesystem::path& path) {
  write_json(query_to_json(q.input, q.output), path);
}

// --- NNet ------------------------------------------------------------------

namespace detail {

class NnetReader {
 public:
  NnetReader(const std::string& text, std::string origin) : in_(text), origin_(std::move(origin)) {}

  // Next non-comment line split on commas; empty fields dropped.
  std::vector<double> numbers(const char* what) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.rfind("//", 0) == 0) continue;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<double> out;
      std::stringstream ls(line);
      std::string tok;
      while (std::getline(ls, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        tok = tok.substr(b, tok.find_last_not_of(" \t\r") + 1 - b);
        try {
          std::size_t used = 0;
          out.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          fail(std::string("bad number '") + tok + "' in " + what);
        }
      }
      return out;
    }
    fail(std::string("unexpected end of file while reading ") + what);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(origin_ + ":" + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istringstream in_;
  std::string origin_;
  std::size_t line_no_ = 0;
};

inline std::size_t as_count(double v, NnetReader& r, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v)) r.fail(std::string(what) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline Network parse_nnet(const std::string& text, const std::string& origin) {
  detail::NnetReader r(text, origin);
  auto header = r.numbers("header");
  if (header.size() < 3) r.fail("header needs numLayers, inputSize, outputSize");
  const std::size_t num_layers = detail::as_count(header[0], r, "numLayers");
  const std::size_t input_size = detail::as_count(header[1], r, "inputSize");

  auto sizes_d = r.numbers("layer sizes");
  if (sizes_d.size() < num_layers + 1) r.fail("expected " + std::to_string(num_layers + 1) + " layer sizes");
  std::vector<std::size_t> sizes;
  for (std::size_t i = 0; i <= num_layers; ++i) sizes.push_back(detail::as_count(sizes_d[i], r, "layer size"));
  if (sizes[0] != input_size) r.fail("first layer size differs from inputSize");

  // symmetric flag, input mins, input maxes, means, ranges: parsed, ignored.
  r.numbers("symmetric flag");
  r.numbers("input minimums");
  r.numbers("input maximums");
  r.numbers("means");
  r.numbers("ranges");

  std::vector<Layer> layers;
  for (std::size_t l = 1; l <= num_layers; ++l) {
    Layer layer;
    layer.weights = Matrix(sizes[l], sizes[l - 1]);
    for (std::size_t row = 0; row < sizes[l]; ++row) {
      auto vals = r.numbers("weights");
      if (vals.size() != sizes[l - 1])
        r.fail("weight row has " + std::to_string(vals.size()) + " entries, expected " +
               std::to_string(sizes[l - 1]));
      for (std::size_t c = 0; c < vals.size(); ++c) layer.weights(row, c) = vals[c];
    }
    layer.biases.resize(sizes[l]);
    for (std::size_t row = 0; row < sizes[l]; ++row) {
      auto vals = r.numbers("biases");
      if (vals.size() != 1) r.fail("bias line must hold exactly one value");
      layer.biases[row] = vals[0];
    }
    layer.activation = l == num_layers ? Activation::Identity : Activation::Relu;
    layers.push_back(std::move(layer));
  }
  try {
    return Network(input_size, std::move(layers));
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

}  // namespace cegarette::io
