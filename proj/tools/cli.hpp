#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcmpr/dcmpr.hpp"

namespace dcmpr::cli {

using nlohmann::json;

namespace detail {

// Flat "key = value" file; '#' starts a comment. Values may hold several
// whitespace- or comma-separated items for list options.
inline std::map<std::string, std::vector<std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::map<std::string, std::vector<std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t\r"));
    key.erase(key.find_last_not_of(" \t\r") + 1);
    if (key.empty() && eq == std::string::npos) continue;
    if (key.empty() || eq == std::string::npos) {
      throw InvalidParameter("config", path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string value = line.substr(eq + 1);
    for (char& ch : value) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream items(value);
    std::vector<std::string> parts;
    for (std::string item; items >> item;) parts.push_back(item);
    if (parts.empty()) throw InvalidParameter(key, "empty value in " + path);
    entries[key] = std::move(parts);
  }
  return entries;
}

// Applies config entries to options that were not given on the command line.
inline void apply_config(CLI::App& app, CLI::App& sub, const std::string& path) {
  for (const auto& [key, values] : read_config_file(path)) {
    if (key == "config") continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (!opt) opt = app.get_option_no_throw("--" + key);
    if (!opt) throw InvalidParameter(key, "unknown key in config file " + path);
    if (opt->count() > 0) continue;
    opt->add_result(values);
    opt->run_callback();
  }
}

inline std::string with_suffix(const std::string& prefix, const std::string& suffix) {
  return prefix + suffix;
}

template <class Fn>
void write_with(const std::string& path, Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  io::write_text_file(path, ss.str());
}

inline void write_json(const std::string& path, const json& j) {
  io::write_text_file(path, j.dump(2) + "\n");
}

inline std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  int verbosity = 0;

  std::uint64_t resolve_seed() {
    if (!seed) seed = entropy_seed();
    return *seed;
  }
};

struct Output {
  std::ostream& out;
  std::ostream& err;
  int verbosity = 0;

  void info(const std::string& msg) const {
    if (verbosity > 0) err << "info: " << msg << '\n';
  }
  void warn(const std::string& msg) const { err << "warning: " << msg << '\n'; }
};

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::int64_t n = 0;
  DegreeParams params = presets::reference_params();
  std::optional<double> lambda2;
  std::optional<double> delta0;
  int max_resamples = 1000;
  std::string out;
};

inline void add_degree_options(CLI::App& sub, DegreeParams& params, std::optional<double>& lambda2,
                               std::optional<double>& delta0) {
  sub.add_option("--alpha", params.alpha, "in-degree Pareto shape (> 1)");
  sub.add_option("--beta", params.beta, "out-degree Pareto shape (> 2)");
  sub.add_option("--lambda1", params.lambda1, "in-degree exponential rate");
  sub.add_option("--lambda2", lambda2, "out-degree exponential rate; calibrated when omitted");
  sub.add_option("--delta0", delta0, "imbalance slack in (0, kappa0); default kappa0 / 2");
}

// Calibrates lambda2 unless given and returns the Algorithm 1 settings.
inline Algorithm1Config resolve_degree_model(DegreeParams& params, const std::optional<double>& lambda2,
                                             const std::optional<double>& delta0, int max_resamples) {
  if (lambda2) {
    params.lambda2 = *lambda2;
  } else {
    calibrate_lambda2(params);
  }
  params.validate();
  if (delta0 && !(*delta0 > 0.0)) throw InvalidParameter("delta0", "must lie in (0, kappa0)");
  Algorithm1Config alg1 = Algorithm1Config::for_params(params, delta0.value_or(-1.0), max_resamples);
  alg1.validate(params);
  return alg1;
}

inline json alg1_json(const Algorithm1Config& alg1) {
  return {{"delta0", alg1.delta0}, {"kappa0", alg1.kappa0}, {"max_resamples", alg1.max_resamples}};
}

inline int cmd_generate(GenerateArgs& a, Globals& g, const Output& log) {
  if (a.n <= 0) throw InvalidParameter("n", "must be positive");
  const Algorithm1Config alg1 = resolve_degree_model(a.params, a.lambda2, a.delta0, a.max_resamples);
  const std::uint64_t seed = g.resolve_seed();
  const RandomStream stream(seed);
  RandomStream degree_rng = stream.child("degrees");
  RandomStream graph_rng = stream.child("graph");

  const auto n = static_cast<std::size_t>(a.n);
  const Algorithm1Trace trace = run_algorithm1_traced(n, a.params, alg1, degree_rng);
  log.info("accepted degree sample after " + std::to_string(trace.attempts) + " attempt(s)");
  const MultiDigraph graph = build_dcm(trace.sequence, graph_rng);

  const json config = {{"command", "generate"}, {"n", n},          {"params", io::params_json(a.params)},
                       {"algorithm1", alg1_json(alg1)}, {"seed", seed}, {"out", a.out}};
  write_with(with_suffix(a.out, ".bidegree.csv"), [&](std::ostream& os) { io::write_bidegree_csv(os, trace.sequence); });
  json bidegree = io::bidegree_sidecar(trace.sequence, a.params, seed);
  bidegree["delta"] = trace.delta;
  bidegree["attempts"] = trace.attempts;
  bidegree["mu"] = a.params.mu();
  bidegree["config"] = config;
  write_json(with_suffix(a.out, ".bidegree.json"), bidegree);

  write_with(with_suffix(a.out, ".edges.csv"), [&](std::ostream& os) { io::write_edges_csv(os, graph); });
  json edges = io::graph_sidecar(graph, seed);
  edges["config"] = config;
  write_json(with_suffix(a.out, ".edges.json"), edges);
  log.out << "wrote " << a.out << ".{bidegree,edges}.{csv,json} (n = " << n
          << ", L_n = " << graph.total_edges() << ")\n";
  return 0;
}

// ---- pagerank ---------------------------------------------------------------

struct PageRankArgs {
  std::string edges;
  std::optional<std::int64_t> n;
  PageRankConfig pr;
  std::optional<int> k;
  bool exact = false;
  std::string out;
};

// n from the option, else the JSON sidecar next to the edge file, else max id + 1.
inline std::optional<std::size_t> resolve_node_count(const PageRankArgs& a) {
  if (a.n) {
    if (*a.n <= 0) throw InvalidParameter("n", "must be positive");
    return static_cast<std::size_t>(*a.n);
  }
  std::filesystem::path sidecar(a.edges);
  sidecar.replace_extension(".json");
  if (sidecar != std::filesystem::path(a.edges) && std::filesystem::exists(sidecar)) {
    const json j = json::parse(io::read_text_file(sidecar.string()), nullptr, false);
    if (j.is_object() && j.contains("n") && j["n"].is_number_unsigned()) return j["n"].get<std::size_t>();
  }
  return std::nullopt;
}

inline int cmd_pagerank(PageRankArgs& a, const CLI::App& sub, const Output& log) {
  const bool eps_given = sub.get_option("--eps0")->count() > 0;
  if (int(a.k.has_value()) + int(a.exact) + int(eps_given) > 1) {
    throw InvalidParameter("mode", "--k, --eps0 and --exact are mutually exclusive");
  }
  a.pr.validate();
  std::ifstream in(a.edges, std::ios::binary);
  if (!in) throw IoError("cannot open " + a.edges);
  const MultiDigraph graph = io::read_edges_csv(in, resolve_node_count(a));
  if (graph.size() == 0) throw EmptyGraph("edge list has no nodes");

  RankVector rank;
  json mode;
  if (a.k) {
    rank = power_iterate_k(graph, a.pr, *a.k);
    mode = *a.k;
  } else if (a.exact) {
    rank = solve_exact(graph, a.pr);
    mode = "exact";
  } else {
    rank = power_iterate_converged(graph, a.pr);
    mode = "converged";
    if (!rank.converged) {
      log.warn("no convergence within " + std::to_string(a.pr.max_iters) + " iterations");
    }
  }
  write_with(with_suffix(a.out, ".rank.csv"), [&](std::ostream& os) { io::write_rank_csv(os, rank); });
  json sidecar = io::rank_sidecar(a.pr, mode, rank);
  sidecar["n"] = graph.size();
  sidecar["config"] = {{"command", "pagerank"}, {"edges", a.edges},        {"n", graph.size()},
                       {"c", a.pr.c},           {"r0", a.pr.r0},           {"eps0", a.pr.eps0},
                       {"max_iters", a.pr.max_iters}, {"mode", mode},      {"out", a.out}};
  write_json(with_suffix(a.out, ".rank.json"), sidecar);
  log.out << "wrote " << a.out << ".rank.{csv,json} (n = " << graph.size() << ")\n";
  return 0;
}

// ---- couple -----------------------------------------------------------------

struct CoupleArgs {
  std::string bidegree;
  int k = 0;
  std::string out;
};

inline int cmd_couple(CoupleArgs& a, Globals& g, const Output& log) {
  if (a.k < 0) throw InvalidParameter("k", "must be nonnegative");
  std::ifstream in(a.bidegree, std::ios::binary);
  if (!in) throw IoError("cannot open " + a.bidegree);
  const BiDegreeSequence seq = io::read_bidegree_csv(in);
  const std::uint64_t seed = g.resolve_seed();
  RandomStream rng = RandomStream(seed).child("explore");
  const CoupledExploration ex = explore_and_couple(seq, a.k, rng);
  log.info(ex.stats.tau ? "coupling broke at level " + std::to_string(*ex.stats.tau)
                        : std::string("coupling held through k"));

  const json config = {{"command", "couple"}, {"bidegree", a.bidegree}, {"k", a.k}, {"seed", seed}, {"out", a.out}};
  json tree = io::tree_json(ex.tree);
  tree["config"] = config;
  write_json(with_suffix(a.out, ".tree.json"), tree);
  json stats = io::coupling_stats_json(ex.stats);
  stats["config"] = config;
  write_json(with_suffix(a.out, ".coupling.json"), stats);
  write_with(with_suffix(a.out, ".edges.csv"), [&](std::ostream& os) { io::write_edges_csv(os, ex.graph); });
  json edges = io::graph_sidecar(ex.graph, seed, ex.stats.root);
  edges["config"] = config;
  write_json(with_suffix(a.out, ".edges.json"), edges);
  log.out << "wrote " << a.out << ".{tree,coupling,edges}.json and " << a.out << ".edges.csv (root "
          << ex.stats.root << ", tau " << (ex.stats.tau ? std::to_string(*ex.stats.tau) : "gt_k") << ")\n";
  return 0;
}

// ---- experiment -------------------------------------------------------------

struct ExperimentArgs {
  std::string preset;
  std::optional<int> replications;
  std::vector<std::size_t> sizes;
  std::optional<int> k;
  std::optional<double> h;
  std::vector<int> ks;
  std::optional<double> c;
  std::vector<double> cs;
  std::optional<double> eps0;
  std::optional<double> r0;
  std::optional<int> max_iters;
  DegreeParams params = presets::reference_params();
  std::optional<double> lambda2;
  std::optional<double> delta0;
  int max_resamples = 1000;
  std::optional<int> roots;
  double coupling_scale = 0.4;
  std::string out;
};

inline ExperimentConfig preset_config(const std::string& name) {
  if (name == "table1") return presets::table1();
  if (name == "table2") return presets::table2();
  if (name == "table3") return presets::table3();
  if (name == "cdf") return presets::cdf();
  ExperimentConfig cfg = presets::base();  // coupling: rule resolved after overrides
  cfg.sizes = {1000, 10000, 100000};
  cfg.replications = 500;
  return cfg;
}

inline json experiment_config_json(const std::string& preset, const ExperimentConfig& cfg) {
  json rule = cfg.rule.kind == IterationRule::Kind::Fixed
                  ? json{{"kind", "fixed"}, {"k", cfg.rule.k}}
                  : json{{"kind", "log_scaled"}, {"h", cfg.rule.h}};
  return {{"command", "experiment"},
          {"preset", preset},
          {"params", io::params_json(cfg.params)},
          {"algorithm1", alg1_json(cfg.alg1)},
          {"sizes", cfg.sizes},
          {"rule", rule},
          {"k_sweep", cfg.k_sweep},
          {"c", cfg.c},
          {"c_sweep", cfg.c_sweep},
          {"r0", cfg.r0},
          {"eps0", cfg.eps0},
          {"max_iters", cfg.max_iters},
          {"replications", cfg.replications},
          {"tbt_root_samples", cfg.tbt_root_samples},
          {"seed", cfg.master_seed}};
}

inline int cmd_experiment(ExperimentArgs& a, const CLI::App& sub, Globals& g, const Output& log) {
  ExperimentConfig cfg = preset_config(a.preset);
  const auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--alpha") || given("--beta") || given("--lambda1") || a.lambda2 || a.delta0 ||
      given("--max-resamples")) {
    cfg.alg1 = resolve_degree_model(a.params, a.lambda2, a.delta0, a.max_resamples);
    cfg.params = a.params;
  }
  if (a.replications) cfg.replications = *a.replications;
  if (!a.sizes.empty()) cfg.sizes = a.sizes;
  if (int(a.k.has_value()) + int(a.h.has_value()) + int(!a.ks.empty()) > 1) {
    throw InvalidParameter("k", "--k, --h and --ks are mutually exclusive");
  }
  if (a.k) {
    cfg.rule = IterationRule::fixed(*a.k);
    cfg.k_sweep.clear();
  }
  if (a.h) {
    if (!(*a.h > 0.0)) throw InvalidParameter("h", "must be positive");
    cfg.rule = IterationRule::log_scaled(*a.h);
    cfg.k_sweep.clear();
  }
  if (!a.ks.empty()) cfg.k_sweep = a.ks;
  if (a.c && !a.cs.empty()) throw InvalidParameter("c", "--c and --cs are mutually exclusive");
  if (a.c) {
    cfg.c = *a.c;
    cfg.c_sweep.clear();
  }
  if (!a.cs.empty()) cfg.c_sweep = a.cs;
  if (a.eps0) cfg.eps0 = *a.eps0;
  if (a.r0) cfg.r0 = *a.r0;
  if (a.max_iters) cfg.max_iters = *a.max_iters;
  if (a.roots) cfg.tbt_root_samples = *a.roots;
  cfg.master_seed = g.resolve_seed();
  cfg.threads = g.threads;

  json extra = json::object();
  if (a.preset == "coupling") {
    const double mu_hat = estimate_mu(cfg.params, cfg.alg1, cfg.master_seed);
    if (!a.k && !a.h && a.ks.empty()) cfg.rule = IterationRule::log_scaled(a.coupling_scale / std::log(mu_hat));
    extra["mu_hat"] = mu_hat;
    if (cfg.k_sweep.empty() && cfg.rule.kind == IterationRule::Kind::LogScaled) {
      const bool inside = within_coupling_regime(cfg.rule.h, mu_hat);
      extra["within_coupling_regime"] = inside;
      if (!inside) log.warn("h log mu >= 1/2: outside the regime where the coupling is expected to hold");
    }
  }
  cfg.validate();
  if (cfg.replications == 1 && a.preset != "cdf") {
    log.warn("replications = 1: standard errors and confidence intervals are undefined");
  }
  const std::string out = a.out.empty() ? a.preset : a.out;
  json sidecar = {{"config", experiment_config_json(a.preset, cfg)}, {"mu", cfg.params.mu()}};
  sidecar.update(extra);

  log.info("running " + a.preset + " with seed " + std::to_string(cfg.master_seed));
  if (a.preset == "coupling") {
    const auto rows = run_coupling_experiment(cfg);
    write_with(out + ".csv", [&](std::ostream& os) { io::write_coupling_csv(os, rows); });
    log.out << "wrote " << out << ".csv (" << rows.size() << " rows)\n";
  } else if (a.preset == "cdf") {
    const CdfResult result = run_cdf_experiment(cfg);
    write_json(out + ".cdf.json", io::cdf_json(result));
    log.out << "wrote " << out << ".cdf.json (KS true vs k-iter " << result.ks_iter << ", true vs tree "
            << result.ks_tbt << ")\n";
  } else {
    const auto rows = run_table_experiment(cfg);
    int failures = 0;
    for (const auto& row : rows) failures += row.failures;
    if (failures > 0) log.warn(std::to_string(failures) + " replication(s) failed and were excluded");
    write_with(out + ".csv", [&](std::ostream& os) { io::write_table_csv(os, rows); });
    log.out << "wrote " << out << ".csv (" << rows.size() << " rows)\n";
  }
  write_json(out + ".json", sidecar);
  return 0;
}

}  // namespace detail

/// Entry point of the dcmpr tool. Returns the process exit code: 0 on
/// success, 2 for usage, configuration and I/O errors, 3 for model errors.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Directed configuration model PageRank and branching-tree coupling"};
  app.require_subcommand(1);
  app.fallthrough();

  detail::Globals globals;
  app.add_option("--seed", globals.seed, "master seed; drawn from entropy and recorded when omitted");
  app.add_option("--threads", globals.threads, "worker threads for experiments (0: all cores)");
  app.add_flag("-v,--verbose", globals.verbosity, "log progress to stderr");

  auto add_config = [](CLI::App* sub, std::string& path) {
    sub->add_option("--config", path, "flat key = value file; command-line flags take precedence")
        ->check(CLI::ExistingFile);
  };

  detail::GenerateArgs gen;
  std::string gen_config;
  CLI::App* generate = app.add_subcommand("generate", "sample a bi-degree sequence and a DCM graph");
  add_config(generate, gen_config);
  generate->add_option("--n", gen.n, "number of nodes");
  detail::add_degree_options(*generate, gen.params, gen.lambda2, gen.delta0);
  generate->add_option("--max-resamples", gen.max_resamples, "resampling budget");
  generate->add_option("--out", gen.out, "output prefix");

  detail::PageRankArgs pr;
  std::string pr_config;
  CLI::App* pagerank = app.add_subcommand("pagerank", "PageRank of a stored edge list");
  add_config(pagerank, pr_config);
  pagerank->add_option("--edges", pr.edges, "edge list CSV");
  pagerank->add_option("--n", pr.n, "number of nodes (default: sidecar, else max id + 1)");
  pagerank->add_option("--c", pr.pr.c, "damping factor in (0, 1)");
  pagerank->add_option("--r0", pr.pr.r0, "initial value of every coordinate");
  pagerank->add_option("--k", pr.k, "run exactly k iterations");
  pagerank->add_option("--eps0", pr.pr.eps0, "iterate until the L2 step is below eps0 (default mode)");
  pagerank->add_flag("--exact", pr.exact, "dense linear solve");
  pagerank->add_option("--max-iters", pr.pr.max_iters, "iteration cap for --eps0");
  pagerank->add_option("--out", pr.out, "output prefix");

  detail::CoupleArgs cp;
  std::string cp_config;
  CLI::App* couple = app.add_subcommand("couple", "explore a DCM graph jointly with its branching tree");
  add_config(couple, cp_config);
  couple->add_option("--bidegree", cp.bidegree, "bi-degree CSV");
  couple->add_option("--k", cp.k, "exploration depth");
  couple->add_option("--out", cp.out, "output prefix");

  detail::ExperimentArgs ex;
  std::string ex_config;
  CLI::App* experiment = app.add_subcommand("experiment", "run a Monte Carlo experiment preset");
  experiment->set_help_flag("--help", "Print this help message and exit");  // -h would clash with --h
  add_config(experiment, ex_config);
  experiment->add_option("preset", ex.preset, "table1 | table2 | table3 | coupling | cdf")
      ->check(CLI::IsMember({"table1", "table2", "table3", "coupling", "cdf"}));
  experiment->add_option("--replications", ex.replications, "replications per cell");
  experiment->add_option("--sizes", ex.sizes, "graph sizes");
  experiment->add_option("--k", ex.k, "fixed iteration count");
  experiment->add_option("--h", ex.h, "k_n = floor(h log n)");
  experiment->add_option("--ks", ex.ks, "iteration counts to sweep");
  experiment->add_option("--c", ex.c, "damping factor");
  experiment->add_option("--cs", ex.cs, "damping factors to sweep");
  experiment->add_option("--eps0", ex.eps0, "convergence threshold of the reference PageRank");
  experiment->add_option("--r0", ex.r0, "initial value of every coordinate");
  experiment->add_option("--max-iters", ex.max_iters, "iteration cap of the reference PageRank");
  detail::add_degree_options(*experiment, ex.params, ex.lambda2, ex.delta0);
  experiment->add_option("--max-resamples", ex.max_resamples, "resampling budget");
  experiment->add_option("--roots", ex.roots, "tree roots sampled by the cdf preset");
  experiment->add_option("--coupling-scale", ex.coupling_scale,
                         "coupling preset: k_n = floor(scale log n / log mu_hat)");
  experiment->add_option("--out", ex.out, "output prefix (default: preset name)");

  std::vector<const char*> args(argv, argv + argc);
  try {
    app.parse(static_cast<int>(args.size()), const_cast<char**>(args.data()));
    CLI::App* sub = app.get_subcommands().front();
    const std::string& config_path = sub == generate ? gen_config
                                     : sub == pagerank ? pr_config
                                     : sub == couple   ? cp_config
                                                       : ex_config;
    if (!config_path.empty()) detail::apply_config(app, *sub, config_path);
    // Required options are checked here because they may come from the config file.
    for (CLI::Option* opt : sub->get_options()) {
      const std::string name = opt->get_name();
      const bool needed = (sub == generate && (name == "--n" || name == "--out")) ||
                          (sub == pagerank && (name == "--edges" || name == "--out")) ||
                          (sub == couple && (name == "--bidegree" || name == "--k" || name == "--out")) ||
                          (sub == experiment && name == "preset");
      if (needed && opt->count() == 0) throw CLI::RequiredError(name);
    }
    if (sub == experiment &&
        !CLI::IsMember({"table1", "table2", "table3", "coupling", "cdf"})(ex.preset).empty()) {
      throw InvalidParameter("preset", "unknown preset '" + ex.preset + "'");
    }

    const detail::Output log{out, err, globals.verbosity};
    if (sub == generate) return detail::cmd_generate(gen, globals, log);
    if (sub == pagerank) return detail::cmd_pagerank(pr, *pagerank, log);
    if (sub == couple) return detail::cmd_couple(cp, globals, log);
    return detail::cmd_experiment(ex, *experiment, globals, log);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << e.what() << '\n';
    return 2;
  } catch (const InvalidParameter& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.name() << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: InternalError: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dcmpr::cli
