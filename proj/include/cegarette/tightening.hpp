#pragma once

#include "bounds.hpp"
#include "network.hpp"

namespace cegarette {

/// Raises the output threshold by the certified gap between an abstract
/// network and the network it over-approximates. If no x in the box has
/// abstract(x) > c + d then no x has original(x) > c, since
/// original(x) + d <= abstract(x) on the box.
inline OutputProperty tighten_property(const Network& abstract, const Network& original, const InputBox& box,
                                       const OutputProperty& q, BoundMethod method) {
  return OutputProperty{q.threshold + output_gap(abstract, original, box, method)};
}

}  // namespace cegarette
