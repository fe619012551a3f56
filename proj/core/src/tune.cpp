#include "proftree/tune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proftree/csv.hpp"
#include "proftree/errors.hpp"
#include "proftree/greedy.hpp"
#include "proftree/rng.hpp"

namespace proftree {

namespace {

using json = nlohmann::json;

constexpr std::int32_t kReplications = 5;

struct FoldData {
  Dataset train;
  Dataset test;
};

std::vector<FoldData> materialize_folds(const Dataset& data, const FoldPlan& plan) {
  std::vector<FoldData> out;
  for (const auto& rep : plan.assignments) {
    for (int f = 0; f < 2; ++f) {
      FoldData fd{data.subset(rep[static_cast<std::size_t>(f)]),
                  data.subset(rep[static_cast<std::size_t>(1 - f)])};
      if (fd.train.churner_count() == 0 || fd.train.churner_count() == fd.train.n_rows() ||
          fd.test.churner_count() == 0 || fd.test.churner_count() == fd.test.n_rows()) {
        throw DataError("cross-validation fold holds a single class");
      }
      out.push_back(std::move(fd));
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

LambdaGrid LambdaGrid::log_spaced(double lo, double hi, std::int32_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw Error("lambda grid: need 0 < lo < hi and count >= 2");
  }
  LambdaGrid g;
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (std::int32_t i = 0; i < count; ++i) {
    g.values.push_back(std::exp(llo + (lhi - llo) * double(i) / double(count - 1)));
  }
  return g;
}

void LambdaGrid::validate() const {
  if (values.empty()) throw Error("lambda grid: empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0.0) throw Error("lambda grid: negative value");
    if (i > 0 && values[i] <= values[i - 1]) throw Error("lambda grid: not strictly increasing");
  }
}

std::string tune_curve_csv(const TuneResult& r) {
  std::ostringstream out;
  out << "lambda,mean_empc,sd_empc\n";
  for (const auto& p : r.curve) {
    out << format_double(p.lambda) << ',' << format_double(p.mean_empc) << ','
        << format_double(p.sd_empc) << '\n';
  }
  return out.str();
}

TuneResult tune_lambda(const Dataset& data, const ProfitParams& p, const LambdaGrid& grid,
                       const EvolveConfig& cfg, std::uint64_t seed, std::ostream* log) {
  grid.validate();
  p.validate();
  const FoldPlan plan = stratified_split(data, kReplications, mix64(seed ^ 0x7A54ULL));
  const auto folds = materialize_folds(data, plan);

  TuneResult result;
  for (std::size_t li = 0; li < grid.values.size(); ++li) {
    std::vector<double> estimates;
    estimates.reserve(folds.size());
    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
      EvolveConfig ecfg = cfg;
      ecfg.lambda = grid.values[li];
      ecfg.seed = mix64(mix64(seed) ^ (li * 1000 + fi));
      const auto trained = evolve(folds[fi].train, p, ecfg);
      const auto scores = score_all(trained.best, folds[fi].test);
      const auto sample = ScoredSample::from_rows(
          scores, {folds[fi].test.labels().begin(), folds[fi].test.labels().end()});
      estimates.push_back(empc(sample, p).empc);
    }
    TuneResult::Point pt{grid.values[li], mean_of(estimates), sd_of(estimates)};
    result.curve.push_back(pt);
    if (log) {
      *log << "tune: lambda " << pt.lambda << " mean EMPC " << pt.mean_empc << " (sd "
           << pt.sd_empc << ")\n";
    }
  }
  // ties go to the larger lambda (simpler trees)
  result.lambda_opt = result.curve.front().lambda;
  double best = result.curve.front().mean_empc;
  for (const auto& pt : result.curve) {
    if (pt.mean_empc >= best) {
      best = pt.mean_empc;
      result.lambda_opt = pt.lambda;
    }
  }
  return result;
}

// ---- benchmark -------------------------------------------------------------

namespace {

const std::vector<std::string> kModelNames = {"proftree", "greedy", "greedy_pruned", "constant"};
const std::vector<std::string> kMetricNames = {"EMPC", "MPC", "eta_p", "eta_r",
                                               "eta_F", "AUC",  "MER"};

std::vector<double> metric_values(const ProfitReport& r) {
  return {r.empc, r.mpc, r.eta_precision, r.eta_recall, r.eta_f1, r.auc, r.mer};
}

// average ranks; every metric except MER ranks descending
std::vector<double> rank_models(const std::vector<double>& values, bool ascending) {
  const auto m = values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ascending ? values[a] < values[b] : values[a] > values[b];
  });
  std::vector<double> ranks(m, 0.0);
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j + 1 < m && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

BenchmarkReport benchmark(const std::vector<Dataset>& datasets,
                          const std::vector<std::string>& names, const ProfitParams& p,
                          const EvolveConfig& cfg, const LambdaGrid& grid, std::uint64_t seed,
                          std::ostream* log) {
  if (datasets.empty()) throw DataError("benchmark: need at least one dataset");
  if (names.size() != datasets.size()) throw Error("benchmark: names do not match datasets");
  grid.validate();

  BenchmarkReport report;
  report.dataset_names = names;
  report.model_names = kModelNames;
  report.metric_names = kMetricNames;

  for (std::size_t di = 0; di < datasets.size(); ++di) {
    const auto& data = datasets[di];
    const std::uint64_t dseed = mix64(seed ^ (0xBE7C0ULL + di));

    double lambda = grid.values.front();
    if (grid.values.size() > 1) {
      if (log) *log << "bench: tuning lambda on " << names[di] << "\n";
      lambda = tune_lambda(data, p, grid, cfg, dseed, log).lambda_opt;
    }
    report.tuned_lambda.push_back(lambda);

    const FoldPlan plan = stratified_split(data, kReplications, mix64(dseed ^ 0xF01D2ULL));
    const auto folds = materialize_folds(data, plan);

    std::vector<std::vector<BenchmarkReport::Cell>> model_cells(
        kModelNames.size(), std::vector<BenchmarkReport::Cell>(kMetricNames.size()));

    for (std::size_t fi = 0; fi < folds.size(); ++fi) {
      const auto& fold = folds[fi];
      std::vector<Tree> models;

      EvolveConfig ecfg = cfg;
      ecfg.lambda = lambda;
      ecfg.seed = mix64(mix64(dseed) ^ (0xE0ULL + fi));
      models.push_back(evolve(fold.train, p, ecfg).best);

      Tree greedy_tree = fit_greedy(fold.train, cfg.constraints);
      models.push_back(greedy_tree);
      models.push_back(prune_greedy(greedy_tree, fold.train, lambda, p));

      Tree constant(fold.train.schema());
      fit_leaves(constant, fold.train);
      models.push_back(std::move(constant));

      for (std::size_t mi = 0; mi < models.size(); ++mi) {
        const auto scores = score_all(models[mi], fold.test);
        const auto sample = ScoredSample::from_rows(
            scores, {fold.test.labels().begin(), fold.test.labels().end()});
        const auto values = metric_values(evaluate_sample(sample, p));
        for (std::size_t k = 0; k < values.size(); ++k) {
          model_cells[mi][k].values.push_back(values[k]);
        }
      }
      if (log) *log << "bench: " << names[di] << " fold " << fi + 1 << "/" << folds.size() << " done\n";
    }

    for (auto& per_model : model_cells) {
      for (auto& cell : per_model) {
        cell.mean = mean_of(cell.values);
        cell.sd = sd_of(cell.values);
      }
    }
    report.cells.push_back(std::move(model_cells));
  }

  // per-dataset ranks and their averages
  report.ranks.resize(datasets.size());
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    report.ranks[di].assign(kModelNames.size(), std::vector<double>(kMetricNames.size(), 0.0));
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      std::vector<double> means;
      for (std::size_t mi = 0; mi < kModelNames.size(); ++mi) {
        means.push_back(report.cells[di][mi][k].mean);
      }
      const auto ranks = rank_models(means, kMetricNames[k] == "MER");
      for (std::size_t mi = 0; mi < kModelNames.size(); ++mi) {
        report.ranks[di][mi][k] = ranks[mi];
      }
    }
  }
  report.avg_ranks.assign(kModelNames.size(), std::vector<double>(kMetricNames.size(), 0.0));
  for (std::size_t mi = 0; mi < kModelNames.size(); ++mi) {
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      double acc = 0.0;
      for (std::size_t di = 0; di < datasets.size(); ++di) acc += report.ranks[di][mi][k];
      report.avg_ranks[mi][k] = acc / static_cast<double>(datasets.size());
    }
  }
  return report;
}

std::string benchmark_json(const BenchmarkReport& r) {
  json j;
  j["models"] = r.model_names;
  j["metrics"] = r.metric_names;
  json datasets = json::array();
  for (std::size_t di = 0; di < r.dataset_names.size(); ++di) {
    json jd;
    jd["name"] = r.dataset_names[di];
    jd["lambda"] = r.tuned_lambda[di];
    json per_model = json::object();
    for (std::size_t mi = 0; mi < r.model_names.size(); ++mi) {
      json jm;
      for (std::size_t k = 0; k < r.metric_names.size(); ++k) {
        const auto& cell = r.cells[di][mi][k];
        jm[r.metric_names[k]] = {{"mean", cell.mean}, {"sd", cell.sd}, {"values", cell.values},
                                 {"rank", r.ranks[di][mi][k]}};
      }
      per_model[r.model_names[mi]] = std::move(jm);
    }
    jd["results"] = std::move(per_model);
    datasets.push_back(std::move(jd));
  }
  j["datasets"] = std::move(datasets);
  json avg = json::object();
  for (std::size_t mi = 0; mi < r.model_names.size(); ++mi) {
    json jm = json::object();
    for (std::size_t k = 0; k < r.metric_names.size(); ++k) {
      jm[r.metric_names[k]] = r.avg_ranks[mi][k];
    }
    avg[r.model_names[mi]] = std::move(jm);
  }
  j["average_ranks"] = std::move(avg);
  return j.dump(2) + "\n";
}

std::string benchmark_text(const BenchmarkReport& r) {
  std::ostringstream out;
  auto pad = [&](const std::string& s, std::size_t w) {
    out << s;
    for (std::size_t i = s.size(); i < w; ++i) out << ' ';
  };
  for (std::size_t di = 0; di < r.dataset_names.size(); ++di) {
    out << "dataset " << r.dataset_names[di] << " (lambda " << r.tuned_lambda[di] << ")\n";
    pad("model", 16);
    for (const auto& m : r.metric_names) pad(m, 10);
    out << '\n';
    for (std::size_t mi = 0; mi < r.model_names.size(); ++mi) {
      pad(r.model_names[mi], 16);
      for (std::size_t k = 0; k < r.metric_names.size(); ++k) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3f", r.cells[di][mi][k].mean);
        pad(buf, 10);
      }
      out << '\n';
    }
    out << '\n';
  }
  out << "average ranks\n";
  pad("model", 16);
  for (const auto& m : r.metric_names) pad(m, 10);
  out << '\n';
  for (std::size_t mi = 0; mi < r.model_names.size(); ++mi) {
    pad(r.model_names[mi], 16);
    for (std::size_t k = 0; k < r.metric_names.size(); ++k) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", r.avg_ranks[mi][k]);
      pad(buf, 10);
    }
    out << '\n';
  }
  return out.str();
}

std::string benchmark_box_csv(const BenchmarkReport& r) {
  std::ostringstream out;
  out << "dataset,model,evaluation,metric,value\n";
  for (std::size_t di = 0; di < r.dataset_names.size(); ++di) {
    for (std::size_t mi = 0; mi < r.model_names.size(); ++mi) {
      for (std::size_t k = 0; k < r.metric_names.size(); ++k) {
        const auto& cell = r.cells[di][mi][k];
        for (std::size_t e = 0; e < cell.values.size(); ++e) {
          out << csv_escape(r.dataset_names[di]) << ',' << r.model_names[mi] << ',' << e + 1
              << ',' << r.metric_names[k] << ',' << format_double(cell.values[e]) << '\n';
        }
      }
    }
  }
  return out.str();
}

}  // namespace proftree
