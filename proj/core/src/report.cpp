#include "proftree/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "proftree/csv.hpp"
#include "proftree/errors.hpp"

namespace proftree {

namespace {

using json = nlohmann::json;

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string report_json(const ProfitReport& r) {
  json j;
  j["empc"] = r.empc;
  j["eta_empc"] = r.eta_empc;
  j["mpc"] = r.mpc;
  j["t_opt"] = r.t_opt;
  j["eta_mpc"] = r.eta_mpc;
  j["eta_precision"] = r.eta_precision;
  j["eta_recall"] = r.eta_recall;
  j["eta_f1"] = r.eta_f1;
  j["auc"] = r.auc;
  j["mer"] = r.mer;
  return j.dump(2) + "\n";
}

ProfitReport report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("report json: ") + e.what());
  }
  ProfitReport r;
  r.empc = j.at("empc").get<double>();
  r.eta_empc = j.at("eta_empc").get<double>();
  r.mpc = j.at("mpc").get<double>();
  r.t_opt = j.at("t_opt").get<double>();
  r.eta_mpc = j.at("eta_mpc").get<double>();
  r.eta_precision = j.at("eta_precision").get<double>();
  r.eta_recall = j.at("eta_recall").get<double>();
  r.eta_f1 = j.at("eta_f1").get<double>();
  r.auc = j.at("auc").get<double>();
  r.mer = j.at("mer").get<double>();
  return r;
}

std::string report_table(const std::vector<std::pair<std::string, ProfitReport>>& rows) {
  static const char* kColumns[] = {"EMPC", "MPC", "eta_p", "eta_r", "eta_F", "AUC", "MER"};
  std::size_t name_width = 5;
  for (const auto& [name, r] : rows) name_width = std::max(name_width, name.size());

  std::ostringstream out;
  out << std::string(name_width, ' ');
  for (const char* c : kColumns) {
    out << "  " << c;
    for (std::size_t i = std::string(c).size(); i < 7; ++i) out << ' ';
  }
  out << "\n";
  for (const auto& [name, r] : rows) {
    out << name << std::string(name_width - name.size(), ' ');
    const double vals[] = {r.empc, r.mpc, r.eta_precision, r.eta_recall, r.eta_f1, r.auc, r.mer};
    for (double v : vals) {
      const auto s = fixed3(v);
      out << "  " << s;
      for (std::size_t i = s.size(); i < 7; ++i) out << ' ';
    }
    out << "\n";
  }
  return out.str();
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out << "threshold,targeted_fraction,profit,accuracy,error_rate,recall,precision,f1\n";
  for (const auto& c : curve) {
    out << format_double(c.threshold) << ',' << format_double(c.targeted_fraction) << ','
        << format_double(c.profit) << ',' << format_double(c.metrics.accuracy) << ','
        << format_double(c.metrics.error_rate) << ',' << format_double(c.metrics.recall) << ',';
    if (c.metrics.precision) out << format_double(*c.metrics.precision);
    out << ',';
    if (c.metrics.f1) out << format_double(*c.metrics.f1);
    out << '\n';
  }
  return out.str();
}

std::string campaign_csv(const ScoredSample& s, double eta) {
  if (!s.has_rows()) throw Error("campaign_csv: needs a row-level sample");
  const auto n = s.size();
  auto list_size =
      static_cast<std::int64_t>(std::ceil(eta * static_cast<double>(n) - 1e-9));
  list_size = std::clamp<std::int64_t>(list_size, 0, n);

  const auto scores = s.scores();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });

  std::ostringstream out;
  out << "row_id,score,rank\n";
  for (std::int64_t i = 0; i < list_size; ++i) {
    const auto row = order[static_cast<std::size_t>(i)];
    out << row << ',' << format_double(scores[static_cast<std::size_t>(row)]) << ',' << (i + 1)
        << '\n';
  }
  return out.str();
}

}  // namespace proftree
