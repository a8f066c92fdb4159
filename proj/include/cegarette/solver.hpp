#pragma once

// Complete decision procedure for a single query: branch and bound over ReLU
// phases, SBT bounds at every node, and an exact LP at fully-fixed leaves.

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bounds.hpp"
#include "network.hpp"
#include "simplex.hpp"

namespace cegarette {

enum class Status { Unsat, Sat, Timeout };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::Unsat: return "UNSAT";
    case Status::Sat: return "SAT";
    case Status::Timeout: return "TIMEOUT";
  }
  return "?";
}

using Clock = std::chrono::steady_clock;

/// Absolute point in time after which work stops. Default: never.
class Deadline {
 public:
  Deadline() = default;
  static Deadline after_seconds(double seconds) {
    Deadline d;
    if (seconds > 0.0)
      d.at_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds));
    return d;
  }
  bool expired() const { return at_ && Clock::now() >= *at_; }

 private:
  std::optional<Clock::time_point> at_;
};

struct SolverStats {
  std::size_t nodes = 0;
  std::size_t lp_calls = 0;
  std::size_t pruned = 0;
  /// Pruned subtrees that turned out to contain a SAT leaf (audit mode only).
  std::size_t audit_violations = 0;
  double time_ms = 0.0;
};

struct Verdict {
  Status status = Status::Unsat;
  std::optional<Vector> witness;  // present iff SAT
  SolverStats stats;
};

struct SolverOptions {
  /// Seconds; 0 disables the limit.
  double timeout_s = 0.0;
  /// y > c is decided as y >= c + epsilon in the LP.
  double epsilon = 1e-6;
  /// Re-explore every pruned subtree without pruning and count SAT leaves.
  bool audit_pruning = false;
  /// Overrides timeout_s when set by a caller sharing one budget.
  std::optional<Deadline> deadline;
};

namespace detail {

struct TimedOut {};

// Pre-activation affine expressions of every hidden neuron and the output
// under a full phase pattern.
struct AffineNetwork {
  std::vector<std::vector<AffineExpr>> pre;  // hidden layers
  AffineExpr output;
};

inline AffineNetwork linearize(const Network& net, const PhaseAssignment& phases) {
  const std::size_t n = net.input_size();
  AffineNetwork lin;
  std::vector<AffineExpr> prev;
  for (std::size_t i = 0; i < n; ++i) {
    AffineExpr e = AffineExpr::zero(n);
    e.coeffs[i] = 1.0;
    prev.push_back(std::move(e));
  }
  for (std::size_t li = 0; li < net.num_layers(); ++li) {
    const Layer& layer = net.layer(li);
    std::vector<AffineExpr> pre, post;
    for (std::size_t j = 0; j < layer.size(); ++j) {
      AffineExpr e = AffineExpr::constant_of(n, layer.biases[j]);
      auto row = layer.weights.row(j);
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k] == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) e.coeffs[i] += row[k] * prev[k].coeffs[i];
        e.constant += row[k] * prev[k].constant;
      }
      const bool relu = layer.activation == Activation::Relu;
      post.push_back(relu && phases[li][j] == Phase::Inactive ? AffineExpr::zero(n) : e);
      pre.push_back(std::move(e));
    }
    if (li + 1 == net.num_layers())
      lin.output = pre.front();
    else
      lin.pre.push_back(std::move(pre));
    prev = std::move(post);
  }
  return lin;
}

inline lp::Constraint phase_constraint(const AffineExpr& pre, Phase phase) {
  // active: pre >= 0, inactive: pre <= 0; the constant moves to the rhs.
  return lp::Constraint{pre.coeffs, phase == Phase::Active ? lp::Relation::GreaterEq : lp::Relation::LessEq,
                        -pre.constant};
}

/// Maximizes the output over the region of one full phase pattern; returns a
/// witness when the maximum reaches c + epsilon and survives re-evaluation.
inline std::optional<Vector> solve_pattern(const Query& q, const PhaseAssignment& full,
                                           const PhaseAssignment& constrained, double epsilon) {
  const AffineNetwork lin = linearize(q.network, full);
  std::vector<lp::Constraint> constraints;
  for (std::size_t li = 0; li < lin.pre.size(); ++li)
    for (std::size_t j = 0; j < lin.pre[li].size(); ++j)
      if (constrained[li][j] != Phase::Unknown) constraints.push_back(phase_constraint(lin.pre[li][j], constrained[li][j]));
  const lp::LpResult r = lp::maximize(lin.output.coeffs, constraints, q.input);
  if (r.status == lp::LpStatus::Infeasible) return std::nullopt;
  if (r.objective + lin.output.constant < q.output.threshold + epsilon) return std::nullopt;
  const double y = evaluate_scalar(q.network, r.x);
  if (!(y > q.output.threshold))
    throw NumericalError("LP optimum reaches the threshold but re-evaluation gives " + std::to_string(y));
  return r.x;
}

class BranchAndBound {
 public:
  BranchAndBound(const Query& q, const SolverOptions& opt, Deadline deadline)
      : q_(q), opt_(opt), deadline_(deadline) {}

  std::optional<Vector> run() {
    PhaseAssignment phases = unknown_phases(q_.network);
    // Cheap first probe at the box centre.
    const Vector centre = q_.input.center();
    if (evaluate_scalar(q_.network, centre) > q_.output.threshold) return centre;
    if (explore(phases, true)) return witness_;
    return std::nullopt;
  }

  SolverStats stats;

 private:
  bool explore(PhaseAssignment& phases, bool pruning) {
    if (deadline_.expired()) throw TimedOut{};
    ++stats.nodes;
    const SbtResult b = sbt(q_.network, q_.input, phases);
    if (!b.feasible) return false;
    const double c = q_.output.threshold;
    if (pruning && b.concrete.output().hi <= c) {
      ++stats.pruned;
      if (opt_.audit_pruning) {
        PhaseAssignment copy = phases;
        std::optional<Vector> keep = witness_;
        if (explore(copy, false)) ++stats.audit_violations;
        witness_ = keep;
      }
      return false;
    }
    if (pruning) {
      // Attack the corner maximizing the symbolic output upper bound.
      const Vector x = b.symbolic.layers.back().pre_upper.front().argmax_over(q_.input);
      if (evaluate_scalar(q_.network, x) > c) {
        witness_ = x;
        return true;
      }
      if (const auto lp_hi = restricted_upper(b, phases)) {
        if (lp_hi->first <= c) {
          ++stats.pruned;
          if (opt_.audit_pruning) {
            PhaseAssignment copy = phases;
            std::optional<Vector> keep = witness_;
            if (explore(copy, false)) ++stats.audit_violations;
            witness_ = keep;
          }
          return false;
        }
        if (evaluate_scalar(q_.network, lp_hi->second) > c) {
          witness_ = lp_hi->second;
          return true;
        }
      }
    }

    // Widest unfixed unstable neuron; ties to the lowest (layer, index).
    std::optional<NeuronId> branch;
    double widest = -1.0;
    for (std::size_t li = 0; li < phases.size(); ++li)
      for (std::size_t j = 0; j < phases[li].size(); ++j) {
        if (phases[li][j] != Phase::Unknown) continue;
        const Interval& pre = b.concrete.layers[li].pre[j];
        if (pre.lo < 0.0 && pre.hi > 0.0 && pre.width() > widest) {
          widest = pre.width();
          branch = NeuronId{li, j};
        }
      }

    if (!branch) {
      ++stats.lp_calls;
      PhaseAssignment full = phases;
      for (std::size_t li = 0; li < full.size(); ++li)
        for (std::size_t j = 0; j < full[li].size(); ++j)
          if (full[li][j] == Phase::Unknown)
            full[li][j] = b.concrete.layers[li].pre[j].lo >= 0.0 ? Phase::Active : Phase::Inactive;
      if (auto x = solve_pattern(q_, full, phases, opt_.epsilon)) {
        witness_ = std::move(x);
        return true;
      }
      return false;
    }

    for (Phase p : {Phase::Active, Phase::Inactive}) {
      phases[branch->layer][branch->index] = p;
      const bool found = explore(phases, pruning);
      phases[branch->layer][branch->index] = Phase::Unknown;
      if (found) return true;
    }
    return false;
  }

  // Maximum of the symbolic output upper bound over the box cut down by the
  // fixed phases (Active: pre_upper >= 0, Inactive: pre_lower <= 0), with
  // its maximizer. -inf when the cut is empty; nullopt at the root or if the
  // LP fails, in which case only the box concretization is used.
  std::optional<std::pair<double, Vector>> restricted_upper(const SbtResult& b, const PhaseAssignment& phases) {
    std::vector<lp::Constraint> cuts;
    for (std::size_t li = 0; li < phases.size(); ++li)
      for (std::size_t j = 0; j < phases[li].size(); ++j) {
        const Phase p = phases[li][j];
        if (p == Phase::Unknown) continue;
        const SymbolicLayer& sl = b.symbolic.layers[li];
        cuts.push_back(phase_constraint(p == Phase::Active ? sl.pre_upper[j] : sl.pre_lower[j], p));
      }
    if (cuts.empty()) return std::nullopt;
    const AffineExpr& out = b.symbolic.layers.back().pre_upper.front();
    ++stats.lp_calls;
    try {
      const lp::LpResult r = lp::maximize(out.coeffs, cuts, q_.input);
      if (r.status == lp::LpStatus::Infeasible)
        return std::make_pair(-std::numeric_limits<double>::infinity(), q_.input.center());
      return std::make_pair(r.objective + out.constant, r.x);
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  }

  const Query& q_;
  const SolverOptions& opt_;
  Deadline deadline_;
  std::optional<Vector> witness_;
};

}  // namespace detail

/// Decides whether some x in the box has N(x) > c.
///
/// UNSAT means no x reaches c + epsilon. SAT carries a witness that was
/// re-evaluated on the network and exceeds c.
inline Verdict solve(const Query& q, const SolverOptions& opt = {}) {
  const auto start = Clock::now();
  const Deadline deadline = opt.deadline ? *opt.deadline : Deadline::after_seconds(opt.timeout_s);
  detail::BranchAndBound search(q, opt, deadline);
  Verdict v;
  try {
    v.witness = search.run();
    v.status = v.witness ? Status::Sat : Status::Unsat;
  } catch (const detail::TimedOut&) {
    v.status = Status::Timeout;
    v.witness.reset();
  }
  v.stats = search.stats;
  v.stats.time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return v;
}

/// Reference decision by enumerating all 2^h phase patterns and maximizing
/// the output over each pattern's polytope. Exponential; meant for labeling
/// small benchmark networks.
inline Verdict solve_by_enumeration(const Query& q, double epsilon = 1e-6, std::size_t max_hidden = 20) {
  const std::size_t h = q.network.total_hidden();
  if (h > max_hidden) throw PreconditionError("too many hidden neurons for phase enumeration");
  const auto start = Clock::now();
  Verdict v;
  PhaseAssignment phases = unknown_phases(q.network);
  for (std::size_t mask = 0; mask < (std::size_t{1} << h); ++mask) {
    std::size_t bit = 0;
    for (auto& layer : phases)
      for (Phase& p : layer) p = (mask >> bit++) & 1U ? Phase::Active : Phase::Inactive;
    ++v.stats.lp_calls;
    if (auto x = detail::solve_pattern(q, phases, phases, epsilon)) {
      v.status = Status::Sat;
      v.witness = std::move(x);
      break;
    }
  }
  v.stats.time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return v;
}

}  // namespace cegarette
