// Command-line front end: verify, bench, gen, and debugging dumps.
//
// Exit codes: 0 completed (any verdict), 1 usage or parse error,
// 2 internal error, 124 timeout in single-query mode.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cegarette/cegarette.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cegarette;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInternal = 2;
constexpr int kExitTimeout = 124;

struct CommonFlags {
  std::string bounds = "sbt";
  double timeout = 0.0;
  double epsilon = 1e-6;
  std::size_t refine_batch = 1;

  LoopOptions loop_options() const {
    LoopOptions o;
    o.bounds = parse_bound_method(bounds);
    o.solver.timeout_s = timeout;
    o.solver.epsilon = epsilon;
    o.refine_batch = refine_batch;
    return o;
  }
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--bounds", f.bounds, "Bound method for property tightening")
      ->check(CLI::IsMember({"ibp", "sbt"}));
  cmd->add_option("--timeout", f.timeout, "Seconds per query (0 = none)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--epsilon", f.epsilon, "Decision granularity for y > c")->check(CLI::PositiveNumber);
  cmd->add_option("--refine-batch", f.refine_batch, "Neurons split per refinement")->check(CLI::PositiveNumber);
}

void emit(const json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << '\n';
  else
    io::write_json(j, out);
}

json bounds_to_json(const BoundsMap& b) {
  json layers = json::array();
  for (const auto& l : b.layers) {
    json pre = json::array(), post = json::array();
    for (const auto& i : l.pre) pre.push_back({i.lo, i.hi});
    for (const auto& i : l.post) post.push_back({i.lo, i.hi});
    layers.push_back({{"pre", pre}, {"post", post}});
  }
  return layers;
}

json categories_to_json(const CategorizedNetwork& cn) {
  json layers = json::array();
  for (std::size_t li = 0; li < cn.categories.size(); ++li) {
    json neurons = json::array();
    for (std::size_t j = 0; j < cn.categories[li].size(); ++j)
      neurons.push_back({{"category", to_string(cn.categories[li][j])}, {"origin", cn.origin[li][j]}});
    layers.push_back(neurons);
  }
  return layers;
}

int run_verify(const std::string& net_path, const std::string& prop_path, const std::string& mode_name,
               const CommonFlags& flags, const std::string& out) {
  const Query q = io::load_query(net_path, prop_path);
  const RunResult r = verify(q, parse_mode(mode_name), flags.loop_options());
  json j = to_json(r);
  j["bounds"] = flags.bounds;
  j["threshold"] = q.output.threshold;
  emit(j, out);
  if (!out.empty()) std::cout << to_string(r.verdict.status) << '\n';
  return r.verdict.status == Status::Timeout ? kExitTimeout : kExitOk;
}

int run_bench_cmd(const std::string& suite_dir, const std::string& modes_csv, const CommonFlags& flags,
                  std::size_t jobs, const std::string& out) {
  BenchOptions opt;
  opt.loop = flags.loop_options();
  opt.jobs = jobs;
  opt.modes.clear();
  std::stringstream ss(modes_csv);
  for (std::string m; std::getline(ss, m, ',');)
    if (!m.empty()) opt.modes.push_back(parse_mode(m));
  const auto suite = load_suite(suite_dir);
  const auto records = run_bench(suite, opt);
  const std::string csv = records_to_csv(records);
  const BenchSummary summary = summarize(records);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream(out) << csv;
    io::write_json(to_json(summary), out + ".summary.json");
  }
  std::cerr << format_summary(summary);
  return kExitOk;
}

int run_gen(std::uint64_t seed, std::size_t count, const std::string& out, const std::string& kind,
            SuiteShape shape) {
  const auto suite = generate_benchmarks(seed, count, shape);
  write_suite(suite, out, json{{"seed", seed}, {"count", count}, {"kind", kind}});
  std::cout << "wrote " << suite.size() << " queries to " << out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CEGAR and CEGARETTE verification of feed-forward ReLU networks"};
  app.require_subcommand(1);

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "Verify one query");
  std::string net_path, prop_path, mode = "cegarette", out;
  CommonFlags vflags;
  verify_cmd->add_option("--net", net_path, "Network file (.json or .nnet)")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--prop", prop_path, "Query file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--mode", mode)->check(CLI::IsMember({"direct", "cegar", "cegarette"}));
  verify_cmd->add_option("--out", out, "Write the run JSON here instead of stdout");
  add_common(verify_cmd, vflags);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a suite in several modes");
  std::string suite_dir, modes = "cegar,cegarette", bench_out;
  std::size_t jobs = 1;
  CommonFlags bflags;
  bench_cmd->add_option("--suite", suite_dir, "Suite directory with manifest.json")->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--modes", modes, "Comma-separated modes");
  bench_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_out, "CSV path; a .summary.json is written next to it");
  add_common(bench_cmd, bflags);

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate a seeded benchmark suite");
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string gen_out, kind = "random";
  SuiteShape shape;
  std::size_t inputs = 0, outputs = 0, min_layers = 0, max_layers = 0, min_width = 0, max_width = 0;
  gen_cmd->add_option("--seed", seed)->required();
  gen_cmd->add_option("--count", count)->required();
  gen_cmd->add_option("--out", gen_out)->required();
  gen_cmd->add_option("--kind", kind)->check(CLI::IsMember({"random", "robustness"}));
  gen_cmd->add_option("--inputs", inputs);
  gen_cmd->add_option("--outputs", outputs);
  gen_cmd->add_option("--min-layers", min_layers);
  gen_cmd->add_option("--max-layers", max_layers);
  gen_cmd->add_option("--min-width", min_width);
  gen_cmd->add_option("--max-width", max_width);

  // debugging dumps
  auto* cat_cmd = app.add_subcommand("categorize", "Dump the categorized network and its category map");
  std::string cat_net, cat_out;
  cat_cmd->add_option("--net", cat_net)->required()->check(CLI::ExistingFile);
  cat_cmd->add_option("--out", cat_out, "Network JSON path; categories go to <out>.categories.json")->required();

  auto* abs_cmd = app.add_subcommand("abstract", "Dump the saturated abstraction and group provenance");
  std::string abs_net, abs_prop, abs_out;
  abs_cmd->add_option("--net", abs_net)->required()->check(CLI::ExistingFile);
  abs_cmd->add_option("--prop", abs_prop)->required()->check(CLI::ExistingFile);
  abs_cmd->add_option("--out", abs_out);

  auto* bounds_cmd = app.add_subcommand("bounds", "Dump per-neuron bounds over a query's input box");
  std::string b_net, b_prop, b_method = "sbt", b_out;
  bounds_cmd->add_option("--net", b_net)->required()->check(CLI::ExistingFile);
  bounds_cmd->add_option("--prop", b_prop)->required()->check(CLI::ExistingFile);
  bounds_cmd->add_option("--bounds", b_method)->check(CLI::IsMember({"ibp", "sbt"}));
  bounds_cmd->add_option("--out", b_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify_cmd) return run_verify(net_path, prop_path, mode, vflags, out);
    if (*bench_cmd) return run_bench_cmd(suite_dir, modes, bflags, jobs, bench_out);
    if (*gen_cmd) {
      if (kind == "robustness") shape = SuiteShape::robustness();
      if (inputs) shape.inputs = inputs;
      if (outputs) shape.outputs = outputs;
      if (min_layers) shape.min_layers = min_layers;
      if (max_layers) shape.max_layers = max_layers;
      if (min_width) shape.min_width = min_width;
      if (max_width) shape.max_width = max_width;
      if (shape.min_layers > shape.max_layers || shape.min_width > shape.max_width || shape.min_width == 0)
        throw InputError("inconsistent shape bounds");
      return run_gen(seed, count, gen_out, kind, shape);
    }
    if (*cat_cmd) {
      const CategorizedNetwork cn = preprocess(io::load_network(cat_net));
      io::save_network(cn.network, cat_out);
      io::write_json(json{{"layers", categories_to_json(cn)}}, cat_out + ".categories.json");
      return kExitOk;
    }
    if (*abs_cmd) {
      const Query q = io::load_query(abs_net, abs_prop);
      auto base = std::make_shared<const CategorizedNetwork>(preprocess(q.network));
      const AbstractionState s = abstract_to_saturation(base, MergePolicy::for_box(q.input));
      json groups = json::array();
      for (std::size_t li = 0; li < s.groups().size(); ++li) {
        json layer = json::array();
        for (std::size_t g = 0; g < s.groups()[li].size(); ++g)
          layer.push_back({{"category", to_string(s.category(li, g))}, {"members", s.groups()[li][g]}});
        groups.push_back(layer);
      }
      emit(json{{"abstract_network", io::network_to_json(s.network())},
                {"groups", groups},
                {"categories", categories_to_json(*base)},
                {"merge_excess", s.merge_excess()}},
           abs_out);
      return kExitOk;
    }
    if (*bounds_cmd) {
      const Query q = io::load_query(b_net, b_prop);
      const BoundsMap b = compute_bounds(q.network, q.input, parse_bound_method(b_method));
      emit(json{{"method", b_method}, {"layers", bounds_to_json(b)}, {"output", {b.output().lo, b.output().hi}}},
           b_out);
      return kExitOk;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
