#pragma once

// Benchmark plumbing: robustness-to-query reduction, seeded suite
// generation, suite files, and batch execution with per-mode comparison summaries.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "loop.hpp"
#include "random.hpp"
#include "solver.hpp"

namespace cegarette {

/// Local robustness of a classifier around a point: every input within
/// `radius` (per dimension) of `center`, inside `domain`, keeps `label`.
struct RobustnessSpec {
  Network network;
  Vector center;
  Vector radius;
  std::size_t label = 0;
  InputBox domain;

  RobustnessSpec(Network net, Vector x0, Vector delta, std::size_t true_label,
                 std::optional<InputBox> input_domain = std::nullopt)
      : network(std::move(net)), center(std::move(x0)), radius(std::move(delta)), label(true_label) {
    const std::size_t n = network.input_size();
    if (input_domain)
      domain = *input_domain;
    else if (network.input_domain())
      domain = *network.input_domain();
    else
      domain = InputBox(Vector(n, 0.0), Vector(n, 1.0));
    if (center.size() != n || radius.size() != n || domain.size() != n)
      throw ValidationError("robustness spec dimensions differ from the network input size");
    for (double d : radius)
      if (!(d >= 0.0)) throw ValidationError("robustness radius must be nonnegative");
    if (label >= network.output_size()) throw ValidationError("robustness label out of range");
  }

  InputBox ball() const {
    Vector lo(center.size()), hi(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
      lo[i] = std::max(center[i] - radius[i], domain.lower[i]);
      hi[i] = std::min(center[i] + radius[i], domain.upper[i]);
      if (lo[i] > hi[i]) throw ValidationError("robustness ball misses the input domain");
    }
    return InputBox(lo, hi);
  }
};

/// One single-output query per competing label j: y = z_j - z_label > 0 on the
/// ball. The difference layer is folded into the output layer, which is the
/// exact composition of the two affine maps. The spec is robust iff every
/// returned query is UNSAT.
inline std::vector<Query> reduce_to_single_output(const RobustnessSpec& spec) {
  const InputBox box = spec.ball();
  const Layer& out = spec.network.output_layer();
  std::vector<Query> queries;
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (j == spec.label) continue;
    std::vector<Layer> layers(spec.network.layers().begin(), spec.network.layers().end() - 1);
    Layer diff;
    diff.activation = Activation::Identity;
    diff.weights = Matrix(1, out.fan_in());
    for (std::size_t k = 0; k < out.fan_in(); ++k) diff.weights(0, k) = out.weights(j, k) - out.weights(spec.label, k);
    diff.biases = {out.biases[j] - out.biases[spec.label]};
    layers.push_back(std::move(diff));
    queries.emplace_back(Network(spec.network.input_size(), std::move(layers), spec.domain), box, OutputProperty{0.0});
  }
  return queries;
}

inline std::size_t argmax(const Vector& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// --- suite generation -------------------------------------------------------

enum class SuiteKind { Random, Robustness };

struct SuiteShape {
  SuiteKind kind = SuiteKind::Random;
  std::size_t inputs = 2;
  std::size_t outputs = 4;  // robustness only
  std::size_t min_layers = 1;
  std::size_t max_layers = 2;
  std::size_t min_width = 2;
  std::size_t max_width = 4;
  /// Random kind: label ground truth by phase enumeration when the net has
  /// at most this many hidden neurons.
  std::size_t label_limit = 8;
  /// Robustness kind: candidate radii, and the sample count used to discard
  /// specs with an easily found misclassification.
  std::vector<double> radii{0.002, 0.005, 0.01, 0.02};
  std::size_t filter_samples = 10000;

  static SuiteShape small_random() { return {}; }

  static SuiteShape robustness() {
    SuiteShape s;
    s.kind = SuiteKind::Robustness;
    s.inputs = 5;
    s.outputs = 4;
    s.min_layers = 2;
    s.max_layers = 4;
    s.min_width = 10;
    s.max_width = 30;
    return s;
  }
};

struct BenchQuery {
  std::string id;
  Query query;
  /// "SAT", "UNSAT" or "unknown".
  std::string expected = "unknown";
};

namespace detail {

inline std::string query_id(std::size_t i) {
  std::ostringstream os;
  os << 'q' << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

inline std::vector<std::size_t> random_widths(Rng& rng, const SuiteShape& s) {
  std::vector<std::size_t> w(rng.integer(s.min_layers, s.max_layers));
  for (auto& x : w) x = rng.integer(s.min_width, s.max_width);
  return w;
}

inline BenchQuery random_query(Rng& rng, const SuiteShape& s, std::size_t index) {
  const Network net = random_network(rng, s.inputs, random_widths(rng, s), 1, 0.5);
  Vector lo(s.inputs), hi(s.inputs);
  for (std::size_t i = 0; i < s.inputs; ++i) {
    const double c = rng.uniform(-1.0, 1.0);
    const double r = rng.uniform(0.05, 1.0);
    lo[i] = c - r;
    hi[i] = c + r;
  }
  InputBox box(lo, hi);
  double ymin = evaluate_scalar(net, box.center()), ymax = ymin;
  for (int k = 0; k < 64; ++k) {
    const double y = evaluate_scalar(net, random_point(rng, box));
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  // Thresholds around the sampled range give a mix of SAT and UNSAT.
  const double span = std::max(ymax - ymin, 1e-3);
  const double c = rng.uniform(ymin + 0.25 * span, ymax + 0.5 * span);
  BenchQuery bq{query_id(index), Query(net, box, OutputProperty{c})};
  if (net.total_hidden() <= s.label_limit) bq.expected = to_string(solve_by_enumeration(bq.query).status);
  return bq;
}

}  // namespace detail

/// Deterministic for a fixed seed and shape.
inline std::vector<BenchQuery> generate_benchmarks(std::uint64_t seed, std::size_t count, const SuiteShape& shape) {
  Rng rng(seed);
  std::vector<BenchQuery> suite;
  if (shape.kind == SuiteKind::Random) {
    for (std::size_t i = 0; i < count; ++i) suite.push_back(detail::random_query(rng, shape, i));
    return suite;
  }
  while (suite.size() < count) {
    const Network net = random_network(rng, shape.inputs, detail::random_widths(rng, shape), shape.outputs);
    Vector x0(shape.inputs);
    for (double& v : x0) v = rng.uniform(0.0, 1.0);
    const std::size_t label = argmax(evaluate(net, x0));
    const double delta = shape.radii[rng.integer(0, shape.radii.size() - 1)];
    RobustnessSpec spec(net, x0, Vector(shape.inputs, delta), label);
    const InputBox ball = spec.ball();
    bool robust_on_samples = true;
    for (std::size_t k = 0; k < shape.filter_samples && robust_on_samples; ++k)
      robust_on_samples = argmax(evaluate(net, random_point(rng, ball))) == label;
    if (!robust_on_samples) continue;
    for (Query& q : reduce_to_single_output(spec)) {
      if (suite.size() == count) break;
      suite.push_back({detail::query_id(suite.size()), std::move(q), "unknown"});
    }
  }
  return suite;
}

inline void write_suite(const std::vector<BenchQuery>& suite, const std::filesystem::path& dir,
                        const nlohmann::json& meta = nlohmann::json::object()) {
  std::filesystem::create_directories(dir);
  nlohmann::json entries = nlohmann::json::array();
  for (const BenchQuery& bq : suite) {
    const std::string net_file = bq.id + ".net.json";
    const std::string prop_file = bq.id + ".prop.json";
    io::save_network(bq.query.network, dir / net_file);
    io::save_query(bq.query, dir / prop_file);
    entries.push_back({{"id", bq.id}, {"net", net_file}, {"prop", prop_file}, {"expected", bq.expected}});
  }
  nlohmann::json manifest = meta;
  manifest["queries"] = entries;
  io::write_json(manifest, dir / "manifest.json");
}

inline std::vector<BenchQuery> load_suite(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::vector<BenchQuery> suite;
  if (!std::filesystem::exists(manifest_path)) throw ParseError(manifest_path.string() + ": no suite manifest");
  const auto manifest = io::detail::parse_json(io::detail::read_file(manifest_path), manifest_path.string());
  const auto& entries = io::detail::field(manifest, "queries", manifest_path.string());
  for (const auto& e : entries) {
    const std::string ctx = manifest_path.string();
    const auto id = io::detail::field(e, "id", ctx).get<std::string>();
    Query q = io::load_query(dir / io::detail::field(e, "net", ctx).get<std::string>(),
                             dir / io::detail::field(e, "prop", ctx).get<std::string>());
    suite.push_back({id, std::move(q), e.value("expected", std::string("unknown"))});
  }
  return suite;
}

// --- batch execution --------------------------------------------------------

struct BenchmarkRecord {
  std::string query_id;
  Mode mode = Mode::Direct;
  /// UNSAT, SAT, TIMEOUT or ERROR.
  std::string verdict;
  std::size_t refinements = 0;
  std::size_t iterations = 0;
  double time_ms = 0.0;
  bool timeout = false;
  std::string error;

  bool finished() const { return verdict == "SAT" || verdict == "UNSAT"; }
};

struct BenchOptions {
  std::vector<Mode> modes{Mode::Cegar, Mode::Cegarette};
  LoopOptions loop;
  std::size_t jobs = 1;
};

/// Runs every (query, mode) pair; results are ordered by query then mode,
/// independent of the worker count.
inline std::vector<BenchmarkRecord> run_bench(const std::vector<BenchQuery>& suite, const BenchOptions& opt) {
  const std::size_t total = suite.size() * opt.modes.size();
  std::vector<BenchmarkRecord> records(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const BenchQuery& bq = suite[i / opt.modes.size()];
      const Mode mode = opt.modes[i % opt.modes.size()];
      BenchmarkRecord& rec = records[i];
      rec.query_id = bq.id;
      rec.mode = mode;
      const auto start = Clock::now();
      try {
        const RunResult r = verify(bq.query, mode, opt.loop);
        rec.verdict = to_string(r.verdict.status);
        rec.refinements = r.stats.refinement_steps;
        rec.iterations = r.stats.iterations;
        rec.timeout = r.verdict.status == Status::Timeout;
      } catch (const std::exception& e) {
        rec.verdict = "ERROR";
        rec.error = e.what();
      }
      rec.time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, total));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return records;
}

inline std::string records_to_csv(const std::vector<BenchmarkRecord>& records) {
  std::ostringstream os;
  os << "query_id,mode,verdict,refinements,iterations,time_ms,timeout\n";
  os << std::fixed << std::setprecision(3);
  for (const auto& r : records)
    os << r.query_id << ',' << to_string(r.mode) << ',' << r.verdict << ',' << r.refinements << ','
       << r.iterations << ',' << r.time_ms << ',' << (r.timeout ? 1 : 0) << '\n';
  return os.str();
}

struct ModeSummary {
  std::size_t finished = 0;
  std::size_t timeouts = 0;
  std::size_t errors = 0;
  std::size_t total_refinements = 0;  // over finished queries
};

/// Aggregates in the layout of the comparison table: finished and timeout
/// counts per mode, and head-to-head wins of cegarette against cegar.
struct BenchSummary {
  std::map<std::string, ModeSummary> modes;
  /// Queries where one mode finished faster (or finished while the other did not).
  std::size_t cegarette_faster = 0, cegar_faster = 0;
  /// Queries both finished where one mode used strictly fewer refinements.
  std::size_t cegarette_fewer_refinements = 0, cegar_fewer_refinements = 0;
  /// Queries on which finished modes disagree.
  std::size_t inconsistent = 0;
};

inline BenchSummary summarize(const std::vector<BenchmarkRecord>& records) {
  BenchSummary s;
  std::map<std::string, std::map<Mode, const BenchmarkRecord*>> by_query;
  for (const auto& r : records) {
    ModeSummary& m = s.modes[to_string(r.mode)];
    if (r.finished()) {
      ++m.finished;
      m.total_refinements += r.refinements;
    } else if (r.timeout) {
      ++m.timeouts;
    } else {
      ++m.errors;
    }
    by_query[r.query_id][r.mode] = &r;
  }
  for (const auto& [id, modes] : by_query) {
    std::string seen;
    for (const auto& [mode, rec] : modes) {
      if (!rec->finished()) continue;
      if (seen.empty())
        seen = rec->verdict;
      else if (seen != rec->verdict) {
        ++s.inconsistent;
        break;
      }
    }
    auto a = modes.find(Mode::Cegarette);
    auto b = modes.find(Mode::Cegar);
    if (a == modes.end() || b == modes.end()) continue;
    const BenchmarkRecord& ette = *a->second;
    const BenchmarkRecord& plain = *b->second;
    if (ette.finished() && (!plain.finished() || ette.time_ms < plain.time_ms)) ++s.cegarette_faster;
    if (plain.finished() && (!ette.finished() || plain.time_ms < ette.time_ms)) ++s.cegar_faster;
    if (ette.finished() && plain.finished()) {
      if (ette.refinements < plain.refinements) ++s.cegarette_fewer_refinements;
      if (plain.refinements < ette.refinements) ++s.cegar_fewer_refinements;
    }
  }
  return s;
}

inline nlohmann::json to_json(const BenchSummary& s) {
  nlohmann::json modes = nlohmann::json::object();
  for (const auto& [name, m] : s.modes)
    modes[name] = {{"finished", m.finished},
                   {"timeouts", m.timeouts},
                   {"errors", m.errors},
                   {"total_refinements", m.total_refinements}};
  return {{"modes", modes},
          {"faster_verification_time", {{"cegarette", s.cegarette_faster}, {"cegar", s.cegar_faster}}},
          {"fewer_refinement_steps",
           {{"cegarette", s.cegarette_fewer_refinements}, {"cegar", s.cegar_fewer_refinements}}},
          {"inconsistent_verdicts", s.inconsistent}};
}

/// Human-readable table, one row per mode.
inline std::string format_summary(const BenchSummary& s) {
  std::ostringstream os;
  os << std::left << std::setw(12) << "mode" << std::setw(10) << "Finished" << std::setw(10) << "Timeout"
     << std::setw(8) << "Errors" << std::setw(14) << "Refinements" << std::setw(10) << "Faster" << "Fewer-Ref\n";
  for (const auto& [name, m] : s.modes) {
    os << std::setw(12) << name << std::setw(10) << m.finished << std::setw(10) << m.timeouts << std::setw(8)
       << m.errors << std::setw(14) << m.total_refinements;
    if (name == "cegarette")
      os << std::setw(10) << s.cegarette_faster << s.cegarette_fewer_refinements;
    else if (name == "cegar")
      os << std::setw(10) << s.cegar_faster << s.cegar_fewer_refinements;
    os << '\n';
  }
  if (s.inconsistent) os << "inconsistent verdicts: " << s.inconsistent << '\n';
  return os.str();
}

}  // namespace cegarette
