#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "proftree/dataset.hpp"
#include "proftree/metrics.hpp"
#include "proftree/rng.hpp"

namespace testutil {

inline proftree::ScoredSample sample(std::vector<double> s, std::vector<std::uint8_t> l) {
  return proftree::ScoredSample::from_rows(std::move(s), std::move(l));
}

// n1 churners scored hi, n0 non-churners scored lo
inline proftree::ScoredSample perfect_sample(int n1, int n0, double hi = 0.9, double lo = 0.1) {
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  for (int i = 0; i < n1; ++i) {
    s.push_back(hi);
    l.push_back(1);
  }
  for (int i = 0; i < n0; ++i) {
    s.push_back(lo);
    l.push_back(0);
  }
  return sample(std::move(s), std::move(l));
}

struct RawSample {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

inline RawSample random_raw(proftree::Rng& rng, int n, bool with_ties, double prior = 0.3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RawSample out;
  for (int i = 0; i < n; ++i) {
    double sc = u(rng);
    if (with_ties) sc = std::round(sc * 10.0) / 10.0;
    out.scores.push_back(sc);
    out.labels.push_back(u(rng) < prior ? 1 : 0);
  }
  return out;
}

inline bool both_classes(const RawSample& r) {
  int n1 = 0;
  for (auto l : r.labels) n1 += l;
  return n1 > 0 && n1 < static_cast<int>(r.labels.size());
}

// single numeric column dataset
inline proftree::Dataset one_column(std::vector<double> x, std::vector<std::uint8_t> y) {
  std::vector<proftree::ColumnSchema> schema{{"x", proftree::ColumnKind::numeric, {}}};
  return proftree::Dataset(std::move(schema), {std::move(x)}, {}, std::move(y), "churn");
}

inline proftree::Dataset two_columns(std::vector<double> x1, std::vector<double> x2,
                                     std::vector<std::uint8_t> y) {
  std::vector<proftree::ColumnSchema> schema{{"x1", proftree::ColumnKind::numeric, {}},
                                             {"x2", proftree::ColumnKind::numeric, {}}};
  return proftree::Dataset(std::move(schema), {std::move(x1), std::move(x2)}, {}, std::move(y),
                           "churn");
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    path = base / ("proftree_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace testutil
