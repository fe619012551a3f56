// Batch CLI: train / evaluate / tune / bench / synth / export.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "proftree/csv.hpp"
#include "proftree/dataset.hpp"
#include "proftree/errors.hpp"
#include "proftree/evolve.hpp"
#include "proftree/greedy.hpp"
#include "proftree/profit.hpp"
#include "proftree/report.hpp"
#include "proftree/rng.hpp"
#include "proftree/synth.hpp"
#include "proftree/tree.hpp"
#include "proftree/tune.hpp"

namespace fs = std::filesystem;
using namespace proftree;

namespace {

struct CommonOpts {
  std::vector<std::string> data_paths;
  std::string label = "churn";
  std::string schema_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::int32_t jobs = 1;

  ProfitParams profit;
  std::optional<double> gamma;

  EvolveConfig evolve_cfg;
  std::vector<double> operator_probs;
  std::optional<std::int32_t> max_leaves;

  // tune / bench grid
  double grid_min = 0.01;
  double grid_max = 1.0;
  std::int32_t grid_size = 20;
  std::vector<double> grid_values;
  std::optional<double> fixed_lambda;
};

std::uint64_t resolve_seed(CommonOpts& o) {
  if (!o.seed) {
    std::random_device rd;
    o.seed = (std::uint64_t(rd()) << 32) ^ rd();
    std::cerr << "seed: " << *o.seed << " (generated; pass --seed to reproduce)\n";
  }
  return *o.seed;
}

void add_data_opts(CLI::App* cmd, CommonOpts& o, bool multiple) {
  auto* d = cmd->add_option("--data", o.data_paths, "Input CSV file(s)")->required();
  if (!multiple) d->expected(1);
  cmd->add_option("--label", o.label, "Label column name")->capture_default_str();
  cmd->add_option("--schema", o.schema_path, "Schema override file");
}

void add_profit_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--clv", o.profit.clv, "Customer lifetime value")->capture_default_str();
  cmd->add_option("--offer-cost", o.profit.offer_cost, "Retention offer cost d")
      ->capture_default_str();
  cmd->add_option("--contact-cost", o.profit.contact_cost, "Contact cost f")
      ->capture_default_str();
  cmd->add_option("--alpha", o.profit.alpha, "Beta prior shape alpha")->capture_default_str();
  cmd->add_option("--beta", o.profit.beta, "Beta prior shape beta")->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "Fixed acceptance probability for MPC");
}

void add_tree_opts(CLI::App* cmd, CommonOpts& o) {
  auto& c = o.evolve_cfg.constraints;
  cmd->add_option("--min-internal", c.min_internal, "Min rows per internal node")
      ->capture_default_str();
  cmd->add_option("--min-leaf", c.min_leaf, "Min rows per leaf")->capture_default_str();
  cmd->add_option("--max-depth", c.max_depth, "Max tree depth")->capture_default_str();
  cmd->add_option("--max-leaves", o.max_leaves, "Max leaf count (default 2^max_depth)");
}

void add_evolve_opts(CLI::App* cmd, CommonOpts& o) {
  auto& e = o.evolve_cfg;
  cmd->add_option("--lambda", e.lambda, "Complexity weight per leaf")->capture_default_str();
  cmd->add_option("--population", e.population_size, "Population size")->capture_default_str();
  cmd->add_option("--min-iterations", e.min_iterations, "Minimum iterations")
      ->capture_default_str();
  cmd->add_option("--max-iterations", e.max_iterations, "Iteration cap")->capture_default_str();
  cmd->add_option("--window", e.convergence_window, "Convergence window")->capture_default_str();
  cmd->add_option("--elite-fraction", e.elite_fraction, "Elite fraction watched for convergence")
      ->capture_default_str();
  cmd->add_option("--operator-probs", o.operator_probs,
                  "Probabilities for split,prune,major,minor,crossover")
      ->expected(5);
}

void finalize_config(CommonOpts& o) {
  if (o.gamma) o.profit.gamma_point = o.gamma;
  if (!o.operator_probs.empty()) {
    for (std::size_t i = 0; i < 5; ++i) o.evolve_cfg.operator_probs[i] = o.operator_probs[i];
  }
  if (o.max_leaves) {
    o.evolve_cfg.constraints.max_leaves = *o.max_leaves;
  } else {
    const auto d = o.evolve_cfg.constraints.max_depth;
    o.evolve_cfg.constraints.max_leaves = d >= 30 ? (1 << 30) : (1 << d);
  }
  o.evolve_cfg.jobs = o.jobs;
}

Dataset load_input(const CommonOpts& o, const std::string& path) {
  IngestReport rep;
  return load_csv(path, o.label, o.schema_path, &rep, &std::cerr);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

LambdaGrid make_grid(const CommonOpts& o) {
  if (o.fixed_lambda) return LambdaGrid{{*o.fixed_lambda}};
  if (!o.grid_values.empty()) {
    LambdaGrid g{o.grid_values};
    g.validate();
    return g;
  }
  return LambdaGrid::log_spaced(o.grid_min, o.grid_max, o.grid_size);
}

// ---- subcommands ---------------------------------------------------------

int cmd_train(CommonOpts& o) {
  finalize_config(o);
  o.evolve_cfg.seed = resolve_seed(o);
  const Dataset data = load_input(o, o.data_paths.front());
  const auto result = evolve(data, o.profit, o.evolve_cfg, &std::cerr);

  fs::create_directories(o.out_dir);
  const fs::path out(o.out_dir);
  write_file(out / "tree.json", export_tree(result.best, TreeFormat::json));
  write_file(out / "tree.dot", export_tree(result.best, TreeFormat::dot));
  write_file(out / "tree.txt", export_tree(result.best, TreeFormat::text));
  write_file(out / "trace.csv", trace_to_csv(result.trace));

  const auto scores = score_all(result.best, data);
  const auto sample =
      ScoredSample::from_rows(scores, {data.labels().begin(), data.labels().end()});
  const auto report = evaluate_sample(sample, o.profit);
  write_file(out / "report.json", report_json(report));
  const auto table = report_table({{"train", report}});
  write_file(out / "report.txt", table);
  std::cout << table;
  std::cout << "fitness " << format_double(result.best_fitness) << " after "
            << result.iterations << " iterations; artifacts in " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(CommonOpts& o, const std::string& tree_path) {
  finalize_config(o);
  const Dataset data = load_input(o, o.data_paths.front());
  const Tree tree = rebind(load_tree(tree_path), data);

  PredictionReport pred;
  const auto scores = score_all(tree, data, &pred);
  if (pred.unseen_level_events > 0) {
    std::cerr << "evaluate: " << pred.unseen_level_events
              << " unseen categorical level routings (sent right)\n";
  }
  const auto sample =
      ScoredSample::from_rows(scores, {data.labels().begin(), data.labels().end()});
  const auto report = evaluate_sample(sample, o.profit);

  fs::create_directories(o.out_dir);
  const fs::path out(o.out_dir);
  write_file(out / "report.json", report_json(report));
  const auto table = report_table({{"model", report}});
  write_file(out / "report.txt", table);
  write_file(out / "campaign.csv", campaign_csv(sample, report.eta_empc));
  write_file(out / "curve.csv", curve_csv(profit_curve(sample, o.profit, o.profit.gamma())));
  std::cout << table;
  return 0;
}

int cmd_tune(CommonOpts& o) {
  finalize_config(o);
  const auto seed = resolve_seed(o);
  const Dataset data = load_input(o, o.data_paths.front());
  const auto grid = make_grid(o);
  const auto result = tune_lambda(data, o.profit, grid, o.evolve_cfg, seed, &std::cerr);

  fs::create_directories(o.out_dir);
  const fs::path out(o.out_dir);
  write_file(out / "tune_curve.csv", tune_curve_csv(result));
  std::string json_text = "{\n  \"lambda_opt\": " + format_double(result.lambda_opt) + "\n}\n";
  write_file(out / "tune.json", json_text);
  std::cout << "lambda_opt " << format_double(result.lambda_opt) << "\n";
  return 0;
}

int cmd_bench(CommonOpts& o) {
  finalize_config(o);
  const auto seed = resolve_seed(o);
  std::vector<Dataset> datasets;
  std::vector<std::string> names;
  for (const auto& path : o.data_paths) {
    datasets.push_back(load_input(o, path));
    names.push_back(fs::path(path).stem().string());
  }
  const auto grid = make_grid(o);
  const auto report = benchmark(datasets, names, o.profit, o.evolve_cfg, grid, seed, &std::cerr);

  fs::create_directories(o.out_dir);
  const fs::path out(o.out_dir);
  write_file(out / "bench.json", benchmark_json(report));
  const auto text = benchmark_text(report);
  write_file(out / "bench.txt", text);
  write_file(out / "bench_box.csv", benchmark_box_csv(report));
  std::cout << text;
  return 0;
}

int cmd_synth(CommonOpts& o, std::int64_t n, double churn_rate, std::int32_t p_numeric,
              std::int32_t p_categorical, const std::string& csv_path,
              const std::string& schema_out, const std::string& oracle_out) {
  const auto seed = resolve_seed(o);
  const auto result = synth_churn(n, churn_rate, p_numeric, p_categorical, seed);
  save_csv(result.data, csv_path);
  if (!schema_out.empty()) save_schema_file(result.data, schema_out);
  if (!oracle_out.empty()) save_tree(result.oracle, oracle_out);
  std::cout << "wrote " << result.data.n_rows() << " rows ("
            << result.data.churner_count() << " churners) to " << csv_path << "\n";
  return 0;
}

int cmd_export(const std::string& tree_path, const std::string& format,
               const std::string& out_path) {
  const Tree tree = load_tree(tree_path);
  TreeFormat fmt;
  if (format == "json") {
    fmt = TreeFormat::json;
  } else if (format == "dot") {
    fmt = TreeFormat::dot;
  } else if (format == "text") {
    fmt = TreeFormat::text;
  } else {
    throw IoError("unknown export format: " + format);
  }
  const auto text = export_tree(tree, fmt);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"profit-driven decision trees for churn prediction"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file ([section] per subcommand)");

  CommonOpts o;

  auto* train = app.add_subcommand("train", "Train a profit-driven tree");
  add_data_opts(train, o, false);
  add_profit_opts(train, o);
  add_tree_opts(train, o);
  add_evolve_opts(train, o);
  train->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  train->add_option("--seed", o.seed, "RNG seed");
  train->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();

  std::string tree_path;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a stored tree on a dataset");
  add_data_opts(evaluate, o, false);
  add_profit_opts(evaluate, o);
  evaluate->add_option("--tree", tree_path, "Tree JSON file")->required();
  evaluate->add_option("--out", o.out_dir, "Output directory")->capture_default_str();

  auto* tune = app.add_subcommand("tune", "Grid-search the complexity weight (5x2 cv)");
  add_data_opts(tune, o, false);
  add_profit_opts(tune, o);
  add_tree_opts(tune, o);
  add_evolve_opts(tune, o);
  tune->add_option("--grid-min", o.grid_min, "Grid lower bound")->capture_default_str();
  tune->add_option("--grid-max", o.grid_max, "Grid upper bound")->capture_default_str();
  tune->add_option("--grid-size", o.grid_size, "Grid size (log-spaced)")->capture_default_str();
  tune->add_option("--grid", o.grid_values, "Explicit grid values");
  tune->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  tune->add_option("--seed", o.seed, "RNG seed");
  tune->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Benchmark learners under shared 5x2 cv folds");
  add_data_opts(bench, o, true);
  add_profit_opts(bench, o);
  add_tree_opts(bench, o);
  add_evolve_opts(bench, o);
  bench->add_option("--grid-min", o.grid_min, "Grid lower bound")->capture_default_str();
  bench->add_option("--grid-max", o.grid_max, "Grid upper bound")->capture_default_str();
  bench->add_option("--grid-size", o.grid_size, "Grid size (log-spaced)")->capture_default_str();
  bench->add_option("--grid", o.grid_values, "Explicit grid values");
  bench->add_option("--fixed-lambda", o.fixed_lambda, "Skip tuning and use this lambda");
  bench->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  bench->add_option("--seed", o.seed, "RNG seed");
  bench->add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();

  std::int64_t synth_n = 2000;
  double synth_rate = 0.3;
  std::int32_t synth_numeric = 4;
  std::int32_t synth_categorical = 2;
  std::string synth_csv = "synth.csv";
  std::string synth_schema, synth_oracle;
  auto* synth = app.add_subcommand("synth", "Generate synthetic churn data with a planted tree");
  synth->add_option("--n", synth_n, "Rows")->capture_default_str();
  synth->add_option("--churn-rate", synth_rate, "Churn probability")->capture_default_str();
  synth->add_option("--numeric", synth_numeric, "Numeric columns")->capture_default_str();
  synth->add_option("--categorical", synth_categorical, "Categorical columns")
      ->capture_default_str();
  synth->add_option("--csv", synth_csv, "Output CSV path")->capture_default_str();
  synth->add_option("--schema-out", synth_schema, "Also write a schema file");
  synth->add_option("--oracle-out", synth_oracle, "Also write the planted tree JSON");
  synth->add_option("--seed", o.seed, "RNG seed");

  std::string export_format = "text";
  std::string export_out;
  auto* exp = app.add_subcommand("export", "Convert a tree JSON to dot/text/json");
  exp->add_option("--tree", tree_path, "Tree JSON file")->required();
  exp->add_option("--format", export_format, "json, dot or text")->capture_default_str();
  exp->add_option("--out", export_out, "Output file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(o);
    if (evaluate->parsed()) return cmd_evaluate(o, tree_path);
    if (tune->parsed()) return cmd_tune(o);
    if (bench->parsed()) return cmd_bench(o);
    if (synth->parsed()) {
      return cmd_synth(o, synth_n, synth_rate, synth_numeric, synth_categorical, synth_csv,
                       synth_schema, synth_oracle);
    }
    if (exp->parsed()) return cmd_export(tree_path, export_format, export_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
