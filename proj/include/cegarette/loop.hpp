#pragma once

// Verification loops: direct solving, CEGAR over the network only, and
// CEGARETTE, which also tightens the output property at every step.

#include <chrono>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "abstraction.hpp"
#include "bounds.hpp"
#include "preprocess.hpp"
#include "solver.hpp"
#include "tightening.hpp"

namespace cegarette {

enum class Mode { Direct, Cegar, Cegarette };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::Direct: return "direct";
    case Mode::Cegar: return "cegar";
    case Mode::Cegarette: return "cegarette";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "direct") return Mode::Direct;
  if (s == "cegar") return Mode::Cegar;
  if (s == "cegarette") return Mode::Cegarette;
  throw InputError("unknown mode '" + s + "' (expected direct, cegar or cegarette)");
}

/// A genuine counterexample must clear the original threshold up to this
/// slack, which only absorbs rounding between equivalent networks.
inline constexpr double kWitnessSlack = 1e-9;

struct LoopOptions {
  BoundMethod bounds = BoundMethod::Sbt;
  SolverOptions solver;
  /// Constituents split per refinement.
  std::size_t refine_batch = 1;
  /// Called with every abstraction state the loop builds.
  std::function<void(const AbstractionState&)> on_state;
};

struct IterationRecord {
  std::vector<std::size_t> hidden_sizes;
  double threshold = 0.0;
  double solver_ms = 0.0;
  Status status = Status::Unsat;
};

struct RunStats {
  Mode mode = Mode::Direct;
  std::size_t iterations = 0;
  std::size_t refinement_steps = 0;
  /// Merge excess of the initial saturated abstraction; bounds iterations.
  std::size_t initial_merge_excess = 0;
  std::vector<IterationRecord> per_iteration;
  double total_ms = 0.0;
  Status verdict = Status::Unsat;
};

struct RunResult {
  Verdict verdict;
  RunStats stats;
};

namespace detail {

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

inline RunResult abstraction_loop(const Query& q, const LoopOptions& opt, Mode mode) {
  const auto start = Clock::now();
  SolverOptions solver_opt = opt.solver;
  solver_opt.deadline = opt.solver.deadline ? *opt.solver.deadline : Deadline::after_seconds(opt.solver.timeout_s);

  RunResult res;
  res.stats.mode = mode;
  auto base = std::make_shared<const CategorizedNetwork>(preprocess(q.network));
  AbstractionState state = abstract_to_saturation(base, MergePolicy::for_box(q.input));
  res.stats.initial_merge_excess = state.merge_excess();

  const bool tighten = mode == Mode::Cegarette;
  while (true) {
    if (opt.on_state) opt.on_state(state);
    const OutputProperty abstract_q =
        tighten ? tighten_property(state.network(), q.network, q.input, q.output, opt.bounds) : q.output;
    const Verdict v = solve(Query(state.network(), q.input, abstract_q), solver_opt);
    ++res.stats.iterations;
    res.stats.per_iteration.push_back({state.hidden_sizes(), abstract_q.threshold, v.stats.time_ms, v.status});

    if (v.status != Status::Sat) {
      res.verdict = v;
      break;
    }
    // Counterexample check against the original query <N, P, Q>.
    const Vector& x0 = *v.witness;
    if (evaluate_scalar(q.network, x0) > q.output.threshold - kWitnessSlack) {
      res.verdict = v;
      break;
    }
    if (state.fully_refined())
      throw std::logic_error("spurious counterexample on a fully refined abstraction");
    state = refine_split(state, x0, opt.refine_batch);
    ++res.stats.refinement_steps;
  }

  if (res.stats.iterations > 1 + res.stats.initial_merge_excess)
    throw std::logic_error("refinement loop exceeded its convergence bound");
  res.stats.verdict = res.verdict.status;
  res.stats.total_ms = elapsed_ms(start);
  return res;
}

}  // namespace detail

inline RunResult verify_direct(const Query& q, const LoopOptions& opt = {}) {
  const auto start = Clock::now();
  RunResult res;
  res.stats.mode = Mode::Direct;
  res.verdict = solve(q, opt.solver);
  res.stats.iterations = 1;
  res.stats.per_iteration.push_back(
      {q.network.hidden_sizes(), q.output.threshold, res.verdict.stats.time_ms, res.verdict.status});
  res.stats.verdict = res.verdict.status;
  res.stats.total_ms = detail::elapsed_ms(start);
  return res;
}

/// Network-only abstraction refinement; the property is never changed.
inline RunResult verify_cegar(const Query& q, const LoopOptions& opt = {}) {
  return detail::abstraction_loop(q, opt, Mode::Cegar);
}

/// Abstraction refinement that re-tightens the threshold against every
/// abstract network, from scratch, before solving it.
inline RunResult verify_cegarette(const Query& q, const LoopOptions& opt = {}) {
  return detail::abstraction_loop(q, opt, Mode::Cegarette);
}

inline RunResult verify(const Query& q, Mode mode, const LoopOptions& opt = {}) {
  switch (mode) {
    case Mode::Direct: return verify_direct(q, opt);
    case Mode::Cegar: return verify_cegar(q, opt);
    case Mode::Cegarette: return verify_cegarette(q, opt);
  }
  throw std::logic_error("unhandled mode");
}

inline nlohmann::json to_json(const RunResult& r) {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& it : r.stats.per_iteration)
    iters.push_back({{"hidden_sizes", it.hidden_sizes},
                     {"threshold", it.threshold},
                     {"solver_ms", it.solver_ms},
                     {"status", to_string(it.status)}});
  nlohmann::json j{{"mode", to_string(r.stats.mode)},
                   {"verdict", to_string(r.verdict.status)},
                   {"iterations", r.stats.iterations},
                   {"refinement_steps", r.stats.refinement_steps},
                   {"initial_merge_excess", r.stats.initial_merge_excess},
                   {"total_ms", r.stats.total_ms},
                   {"solver", {{"nodes", r.verdict.stats.nodes},
                               {"lp_calls", r.verdict.stats.lp_calls},
                               {"pruned", r.verdict.stats.pruned}}},
                   {"per_iteration", iters}};
  j["witness"] = r.verdict.witness ? nlohmann::json(*r.verdict.witness) : nlohmann::json(nullptr);
  return j;
}

}  // namespace cegarette
