// Apache License, Version 2.0, refer to LICENSE.txt
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fi/context.hpp"
#include "fi/forest.hpp"
#include "fi/importance.hpp"
#include "fi/netinfer.hpp"
#include "fi/report.hpp"
#include "fi/srs.hpp"

namespace {

struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
  int decimals = 4;
};

struct ForestFlags {
  int trees = 100;
  int K = 1;
  int depth = -1;
  std::string method = "extra_trees";
  std::string family = "multiway";
  std::string impurity;
  int q = 0;
  std::size_t l = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads (default: FI_THREADS or all cores)");
  sub->add_option("--out", c.out, "Output file (default: stdout)");
  sub->add_option("--format", c.format, "csv, json or markdown")->capture_default_str();
  sub->add_option("--decimals", c.decimals, "Digits after the decimal point")->capture_default_str();
}

void add_forest(CLI::App* sub, ForestFlags& f) {
  sub->add_option("--trees", f.trees, "Number of trees")->capture_default_str();
  sub->add_option("--K", f.K, "Candidate features per node")->capture_default_str();
  sub->add_option("--depth", f.depth, "Maximum tree depth (-1: unlimited)")->capture_default_str();
  sub->add_option("--method", f.method,
                  "bagging, random_subspace, random_patches, extra_trees or totally_randomized")
      ->capture_default_str();
  sub->add_option("--family", f.family, "multiway, binary_ordered, binary_unordered or one_vs_all")
      ->capture_default_str();
  sub->add_option("--impurity", f.impurity, "shannon, gini or variance");
  sub->add_option("--q", f.q, "Features per tree for subspace methods");
  sub->add_option("--l", f.l, "Rows per tree for random patches");
}

fi::ForestConfig forest_config(const ForestFlags& f, const Common& c) {
  fi::ForestConfig cfg;
  cfg.method = fi::parse_method(f.method);
  cfg.n_trees = f.trees;
  cfg.tree.K = f.K;
  cfg.tree.max_depth = f.depth;
  cfg.tree.family = fi::parse_split_family(f.family);
  if (!f.impurity.empty()) cfg.tree.impurity = fi::parse_impurity(f.impurity);
  cfg.q = f.q;
  cfg.l = f.l;
  cfg.seed = c.seed;
  cfg.threads = c.threads;
  return cfg;
}

void emit(const std::string& text, const Common& c) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out);
  if (!out) throw fi::FormatError("cannot write " + c.out);
  out << text;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Prints a command line that reproduces the run.
void echo_config(const CLI::App* sub) {
  std::ostringstream line;
  line << "# fi " << sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    std::string name = opt->get_name();
    if (opt->get_items_expected_max() == 0) {
      if (opt->count() > 0) line << " " << name;
      continue;
    }
    std::string v = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
    if (v.empty()) continue;
    line << " " << name << " " << v;
  }
  std::cerr << line.str() << "\n";
}

// Expands --config FILE into flags placed before the user's own, which win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t drop = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      drop = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      drop = 1;
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) throw fi::FormatError("cannot open config " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw fi::FormatError("config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw fi::FormatError("config " + path + ": expected an object");
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + drop));
    std::set<std::string> given;
    for (auto& a : args)
      if (a.rfind("--", 0) == 0) given.insert(a.substr(0, a.find('=')));
    std::vector<std::string> extra;
    for (auto& [key, val] : j.items()) {
      std::string flag = "--" + key;
      if (given.count(flag)) continue;
      if (val.is_boolean()) {
        if (val.get<bool>()) extra.push_back(flag);
        continue;
      }
      extra.push_back(flag);
      extra.push_back(val.is_string() ? val.get<std::string>() : val.dump());
    }
    // Flags go right after the verb.
    std::size_t at = args.empty() ? 0 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
    break;
  }
  return args;
}

fi::Dataset load_data(const std::string& path, const std::string& target, const std::string& context) {
  fi::Dataset ds = fi::load_csv(path, target, context);
  ds.validate();
  return ds;
}

std::vector<std::string> names_in_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fi::FormatError("cannot open " + path);
  std::vector<std::string> names;
  std::set<std::string> seen;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    auto cells = fi::detail::split_csv_line(line);
    if (first && !cells.empty() && cells[0] == "src") {
      first = false;
      continue;
    }
    first = false;
    for (std::size_t k = 0; k < 2 && k < cells.size(); ++k)
      if (!cells[k].empty() && seen.insert(cells[k]).second) names.push_back(cells[k]);
  }
  return names;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-ensemble feature importances, contextual analysis, SRS selection and network inference"};
  app.require_subcommand(1);

  // ---- gen ----
  Common gen_c;
  std::string problem, dynamics = "spiking", truth_out;
  fi::ProblemParams pp;
  std::size_t rows = 0;
  int net_p = 30, net_T = 5000;
  double density = 0.1;
  auto* gen = app.add_subcommand("gen", "Generate a problem distribution, a dataset or a synthetic network");
  add_common(gen, gen_c);
  gen->add_option("--problem", problem,
                  "digit, digit_card4, xor_strongweak, problem1_context, example1_context, problem2_context, chain, "
                  "clique, marginal_only or network")
      ->required();
  gen->add_option("--alpha", pp.alpha, "xor_strongweak mixing parameter")->capture_default_str();
  gen->add_option("--p", pp.p, "Number of inputs (chain, clique, marginal_only)")->capture_default_str();
  gen->add_option("--r", pp.r, "Relevant inputs (chain, clique, marginal_only)")->capture_default_str();
  gen->add_option("--rows", rows, "Sample this many rows to CSV (0: exact distribution or exact frequencies)");
  gen->add_option("--nodes", net_p, "Network size")->capture_default_str();
  gen->add_option("--T", net_T, "Network time steps")->capture_default_str();
  gen->add_option("--density", density, "Network edge probability")->capture_default_str();
  gen->add_option("--dynamics", dynamics, "gaussian or spiking")->capture_default_str();
  gen->add_option("--truth", truth_out, "Network truth edge list output");

  // ---- importance ----
  Common imp_c;
  ForestFlags imp_f;
  bool imp_oracle = false;
  std::string imp_dist, imp_data, imp_target, imp_context, measure = "mdi", loss = "zero_one";
  int repeats = 10;
  auto* imp = app.add_subcommand("importance", "Empirical or asymptotic importances");
  add_common(imp, imp_c);
  add_forest(imp, imp_f);
  imp->add_flag("--oracle", imp_oracle, "Asymptotic importances of a distribution (--depth sets q)");
  imp->add_option("--dist", imp_dist, "Distribution JSON");
  imp->add_option("--data", imp_data, "Dataset CSV");
  imp->add_option("--target", imp_target, "Output column");
  imp->add_option("--context", imp_context, "Column excluded from the inputs");
  imp->add_option("--measure", measure, "mdi, mda, mda_zscore or frequency")->capture_default_str();
  imp->add_option("--loss", loss, "zero_one or mse")->capture_default_str();
  imp->add_option("--repeats", repeats, "Permutations per tree for mda")->capture_default_str();

  // ---- context ----
  Common ctx_c;
  ForestFlags ctx_f;
  bool ctx_oracle = false;
  std::string ctx_dist, ctx_data, ctx_target, ctx_context;
  std::size_t min_stratum = 5;
  int permutations = 0;
  auto* ctx = app.add_subcommand("context", "Contextual importances");
  add_common(ctx, ctx_c);
  add_forest(ctx, ctx_f);
  ctx->add_flag("--oracle", ctx_oracle, "Asymptotic values of a distribution with a context variable");
  ctx->add_option("--dist", ctx_dist, "Distribution JSON");
  ctx->add_option("--data", ctx_data, "Dataset CSV");
  ctx->add_option("--target", ctx_target, "Output column");
  ctx->add_option("--context", ctx_context, "Context column");
  ctx->add_option("--min-stratum", min_stratum, "Smallest stratum used at a node")->capture_default_str();
  ctx->add_option("--permutations", permutations, "Permutation count for p-values (0: none)")->capture_default_str();

  // ---- srs ----
  Common srs_c;
  fi::SrsConfig scfg;
  std::string srs_data, srs_target, srs_family = "multiway";
  bool plain_rs = false;
  auto* srs = app.add_subcommand("srs", "Sequential random subspace feature selection");
  add_common(srs, srs_c);
  srs->add_option("--data", srs_data, "Dataset CSV")->required();
  srs->add_option("--target", srs_target, "Output column");
  srs->add_option("--q", scfg.q, "Subspace size")->capture_default_str();
  srs->add_option("--iterations", scfg.T, "Number of trees")->capture_default_str();
  srs->add_option("--alpha", scfg.alpha, "Fraction of the subspace reused from F")->capture_default_str();
  srs->add_option("--K", scfg.K, "Candidate features per node")->capture_default_str();
  srs->add_option("--depth", scfg.tree.max_depth, "Maximum tree depth")->capture_default_str();
  srs->add_option("--family", srs_family, "Split family")->capture_default_str();
  srs->add_option("--L", scfg.L, "Evaluations before the probe test applies")->capture_default_str();
  srs->add_option("--beta", scfg.beta, "Probe test threshold")->capture_default_str();
  srs->add_flag("--exact", scfg.exact, "Relevance rule importance > tol instead of the probe test");
  srs->add_flag("--rs", plain_rs, "Plain random subspace instead of SRS");

  // ---- srs-theory ----
  Common th_c;
  std::string scenario = "chaining", th_method = "both", solver = "closed";
  double th_p = 1e4, th_q = 100;
  int th_r = 1, th_i = 0, runs = 10000;
  auto* th = app.add_subcommand("srs-theory", "Expected time to find relevant features");
  add_common(th, th_c);
  th->add_option("--scenario", scenario, "chaining, clique or marginal_only")->capture_default_str();
  th->add_option("--method", th_method, "RS, SRS or both")->capture_default_str();
  th->add_option("--p", th_p, "Number of features")->capture_default_str();
  th->add_option("--q", th_q, "Subspace size")->capture_default_str();
  th->add_option("--r", th_r, "Relevant features")->capture_default_str();
  th->add_option("--i", th_i, "Features to find (default r)");
  th->add_option("--solver", solver, "closed, markov or simulate")->capture_default_str();
  th->add_option("--runs", runs, "Monte-Carlo runs")->capture_default_str();

  // ---- netinfer ----
  Common net_c;
  ForestFlags net_f;
  std::string series_path, scorer = "pc", filter = "average";
  double tau = 0.11, phi1 = 0.2, phi2 = 0.5, dir_weight = 0.997;
  int components = 0;
  bool directivity = false, no_regularizer = false;
  auto* net = app.add_subcommand("netinfer", "Score candidate edges of a network from time series");
  add_common(net, net_c);
  add_forest(net, net_f);
  net->add_option("--series", series_path, "Time series CSV")->required();
  net->add_option("--scorer", scorer, "pc, pearson or genie3")->capture_default_str();
  net->add_option("--filter", filter, "f1, f2, f3, f4, average or none")->capture_default_str();
  net->add_option("--tau", tau, "Hard threshold")->capture_default_str();
  net->add_option("--components", components, "Leading components kept in the inverse (0: exact)")
      ->capture_default_str();
  net->add_flag("--no-weighting", no_regularizer, "Skip the activity weighting stage");
  net->add_flag("--directivity", directivity, "Apply the lagged-count direction correction");
  net->add_option("--phi1", phi1, "Lower jump bound")->capture_default_str();
  net->add_option("--phi2", phi2, "Upper jump bound")->capture_default_str();
  net->add_option("--weight", dir_weight, "Weight of the undirected scores")->capture_default_str();

  // ---- eval ----
  Common ev_c;
  std::string scores_path, truth_path;
  bool undirected = false;
  auto* ev = app.add_subcommand("eval", "AUROC and AUPRC of edge scores against a truth network");
  add_common(ev, ev_c);
  ev->add_option("--scores", scores_path, "Scores CSV (src,dst,score)")->required();
  ev->add_option("--truth", truth_path, "Truth edge list CSV")->required();
  ev->add_flag("--undirected", undirected, "Ignore edge direction");

  std::string config_path;  // consumed by expand_config before parsing
  for (auto* sub : app.get_subcommands({})) sub->add_option("--config", config_path, "JSON file supplying any flag");

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.push_back(argv[i]);
  try {
    std::vector<std::string> fwd(args.rbegin(), args.rend());
    fwd = expand_config(fwd);
    args.assign(fwd.rbegin(), fwd.rend());
    if (args.empty()) {
      std::cerr << app.help();
      return 2;
    }
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    for (auto* sub : app.get_subcommands()) echo_config(sub);

    if (*gen) {
      if (problem == "network") {
        auto dyn = dynamics == "gaussian" ? fi::Dynamics::gaussian
                   : dynamics == "spiking" ? fi::Dynamics::spiking
                                           : throw fi::ParameterError("unknown dynamics '" + dynamics + "'");
        auto netw = fi::synth_network(net_p, density, net_T, gen_c.seed, dyn);
        if (gen_c.out.empty()) throw fi::ParameterError("--out is required for networks");
        fi::save_series(netw.series, gen_c.out);
        if (!truth_out.empty()) {
          std::ofstream t(truth_out);
          if (!t) throw fi::FormatError("cannot write " + truth_out);
          t << "src,dst\n";
          for (auto [a, b] : netw.edges) t << netw.series.names[a] << "," << netw.series.names[b] << "\n";
        }
        return 0;
      }
      auto d = fi::generate(fi::parse_problem(problem), pp);
      bool csv = rows > 0 || ends_with(gen_c.out, ".csv") || gen_c.format == "csv";
      if (ends_with(gen_c.out, ".json") || (!csv && gen_c.format == "json")) csv = false;
      if (!csv) {
        emit(fi::to_json(d).dump(2) + "\n", gen_c);
      } else {
        fi::Dataset ds = rows > 0 ? fi::sample(d, rows, gen_c.seed) : fi::exact_frequency(d);
        std::ostringstream s;
        fi::save_csv(ds, s);
        emit(s.str(), gen_c);
      }
      return 0;
    }

    if (*imp) {
      auto fmt = fi::parse_format(imp_c.format);
      fi::ImportanceReport rep;
      if (imp_oracle) {
        if (imp_dist.empty()) throw fi::ParameterError("--oracle needs --dist");
        auto d = fi::load_distribution(imp_dist);
        rep = fi::asymptotic_mdi_table(d, imp_f.depth < 0 ? d.p() : imp_f.depth);
      } else {
        if (imp_data.empty()) throw fi::ParameterError("need --data (or --oracle --dist)");
        auto ds = load_data(imp_data, imp_target, imp_context);
        auto f = fi::build_forest(ds, forest_config(imp_f, imp_c));
        if (measure == "mdi") rep = fi::mdi(f, ds);
        else if (measure == "frequency") rep = fi::selection_frequency(f, ds);
        else if (measure == "mda") rep = fi::mda(f, ds, fi::parse_loss(loss), repeats, imp_c.seed);
        else if (measure == "mda_zscore") rep = fi::mda_zscore(f, ds, fi::parse_loss(loss), repeats, imp_c.seed);
        else throw fi::ParameterError("unknown measure '" + measure + "'");
      }
      emit(fi::render(rep, fmt, imp_c.decimals), imp_c);
      return 0;
    }

    if (*ctx) {
      auto fmt = fi::parse_format(ctx_c.format);
      fi::ContextReport rep;
      if (ctx_oracle) {
        if (ctx_dist.empty()) throw fi::ParameterError("--oracle needs --dist");
        rep = fi::asymptotic_contextual(fi::load_distribution(ctx_dist));
      } else {
        if (ctx_data.empty() || ctx_context.empty()) throw fi::ParameterError("need --data and --context");
        auto ds = load_data(ctx_data, ctx_target, ctx_context);
        auto f = fi::build_forest(ds, forest_config(ctx_f, ctx_c));
        fi::ContextOptions opt;
        opt.min_stratum = min_stratum;
        opt.threads = ctx_c.threads;
        if (!ctx_f.impurity.empty()) opt.impurity = fi::parse_impurity(ctx_f.impurity);
        rep = permutations > 0 ? fi::ctx_pvalues(f, ds, permutations, ctx_c.seed, opt)
                               : fi::contextual_importances(f, ds, opt);
      }
      emit(fi::render(rep, fmt, ctx_c.decimals), ctx_c);
      return 0;
    }

    if (*srs) {
      auto ds = load_data(srs_data, srs_target, "");
      scfg.seed = srs_c.seed;
      scfg.tree.family = fi::parse_split_family(srs_family);
      auto res = plain_rs ? fi::rs_run(ds, scfg) : fi::srs_run(ds, scfg);
      nlohmann::json j;
      j["method"] = plain_rs ? "RS" : "SRS";
      std::vector<std::string> found;
      for (int c : res.trace.F) found.push_back(ds.columns[c].name);
      j["selected"] = found;
      j["iterations"] = nlohmann::json::array();
      for (std::size_t t = 0; t < res.trace.iterations.size(); ++t)
        j["iterations"].push_back(fi::to_json(res.trace.iterations[t], static_cast<int>(t)));
      emit(j.dump(2) + "\n", srs_c);
      return 0;
    }

    if (*th) {
      std::vector<fi::Selector> methods;
      if (th_method == "RS" || th_method == "both") methods.push_back(fi::Selector::RS);
      if (th_method == "SRS" || th_method == "both") methods.push_back(fi::Selector::SRS);
      if (methods.empty()) throw fi::ParameterError("unknown method '" + th_method + "'");
      int i = th_i > 0 ? th_i : th_r;
      std::ostringstream s;
      s << "scenario,method,p,q,r,i,solver,expected_time\n";
      for (auto m : methods) {
        fi::ScenarioModel model{fi::parse_scenario(scenario), m, th_p, th_q, th_r};
        double t;
        if (solver == "closed") t = fi::expected_time(model, i);
        else if (solver == "markov") t = fi::markov_expected_time(model, i);
        else if (solver == "simulate") t = fi::simulate_selection(model, i, runs, th_c.seed);
        else throw fi::ParameterError("unknown solver '" + solver + "'");
        s << scenario << "," << (m == fi::Selector::RS ? "RS" : "SRS") << "," << th_p << "," << th_q << "," << th_r
          << "," << i << "," << solver << "," << fi::detail::fmt(t, th_c.decimals) << "\n";
      }
      emit(s.str(), th_c);
      return 0;
    }

    if (*net) {
      auto series = fi::load_series(series_path);
      fi::FilterSpec base;
      base.tau = tau;
      if (no_regularizer) base.regularizer = fi::Regularizer::none;
      std::vector<fi::FilterSpec> grid;
      std::vector<double> weights;
      if (filter == "average") {
        std::tie(grid, weights) = fi::default_challenge_grid(base);
      } else if (filter == "none") {
        base.use_low_pass = base.use_diff = base.use_threshold = false;
        base.regularizer = fi::Regularizer::none;
        grid = {base};
        weights = {1.0};
      } else {
        base.low_pass = fi::parse_low_pass(filter);
        grid = {base};
        weights = {1.0};
      }
      fi::ScoreMatrix scores;
      if (scorer == "pc") {
        scores = fi::averaged_partial_correlation(series, grid, weights, components, net_c.threads);
      } else if (scorer == "pearson") {
        scores = fi::averaged_scores(
            series, grid, weights, [](const Eigen::MatrixXd& x) { return fi::pearson_correlation(x); },
            net_c.threads);
      } else if (scorer == "genie3") {
        if (grid.size() != 1) throw fi::ParameterError("genie3 takes a single filter, not 'average'");
        fi::TimeSeries pre = fi::preprocess(series, grid[0]);
        ForestFlags ff = net_f;
        if (ff.family == "multiway") ff.family = "binary_ordered";
        auto res = fi::genie3_scores(pre, forest_config(ff, net_c));
        for (auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
        scores = res.scores;
      } else {
        throw fi::ParameterError("unknown scorer '" + scorer + "'");
      }
      if (directivity) {
        fi::TimeSeries pre = fi::preprocess(series, grid[0]);
        // Align the count window with the score's preprocessing.
        scores = fi::directivity_adjust(pre.values, scores, phi1, phi2, dir_weight);
      }
      std::ostringstream s;
      fi::save_scores(scores, series.names, s);
      emit(s.str(), net_c);
      return 0;
    }

    if (*ev) {
      auto names = names_in_scores(scores_path);
      auto scores = fi::load_scores(scores_path, names, !undirected);
      auto edges = fi::load_edges(truth_path, names);
      auto r = fi::evaluate(scores, edges, !undirected);
      std::ostringstream s;
      s << "auroc,auprc,positives,candidates\n"
        << fi::detail::fmt(r.auroc, ev_c.decimals) << "," << fi::detail::fmt(r.auprc, ev_c.decimals) << ","
        << r.positives << "," << r.candidates << "\n";
      emit(s.str(), ev_c);
      return 0;
    }
  } catch (const fi::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
