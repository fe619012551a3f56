#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "proftree/profit.hpp"

namespace proftree {

std::string report_json(const ProfitReport& r);
ProfitReport report_from_json(const std::string& text);

/// Aligned table with the columns EMPC, MPC, eta_p, eta_r, eta_F, AUC, MER;
/// one row per named report.
std::string report_table(const std::vector<std::pair<std::string, ProfitReport>>& rows);

std::string curve_csv(const std::vector<CurvePoint>& curve);

/// Campaign list CSV (row_id, score, rank) for the ceil(eta * N) top-scored
/// rows, original order on ties.
std::string campaign_csv(const ScoredSample& s, double eta);

}  // namespace proftree
