#include "proftree/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "proftree/csv.hpp"
#include "proftree/errors.hpp"

namespace proftree {

namespace {

constexpr int kOperatorRetries = 10;
constexpr double kImprovementTol = 1e-12;

std::vector<TreeNode*> internal_nodes(Tree& t) {
  std::vector<TreeNode*> out;
  for (auto* n : t.nodes()) {
    if (!n->is_leaf()) out.push_back(n);
  }
  return out;
}

template <typename T>
T* pick(const std::vector<T*>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

bool satisfies(Tree& t, const Dataset& data, const TreeConstraints& c) {
  if (!try_fit_leaves(t, data)) return false;
  return check_constraints(t, c).empty();
}

// leaves that can become an internal node under the constraints
std::vector<TreeNode*> splittable_leaves(Tree& t, const TreeConstraints& c) {
  struct Walk {
    const TreeConstraints& c;
    std::vector<TreeNode*> out;
    void visit(TreeNode& n, std::int32_t depth) {
      if (n.is_leaf()) {
        if (depth < c.max_depth && n.samples >= c.min_internal &&
            n.samples >= 2 * std::int64_t{c.min_leaf}) {
          out.push_back(&n);
        }
        return;
      }
      visit(*n.left, depth + 1);
      visit(*n.right, depth + 1);
    }
  } walk{c, {}};
  if (t.leaf_count() < c.max_leaves) walk.visit(t.root(), 0);
  return walk.out;
}

void collapse_to_leaf(TreeNode& n) {
  n.left.reset();
  n.right.reset();
  n.rule = SplitRule{};
  n.score = n.samples > 0 ? static_cast<double>(n.churners) / static_cast<double>(n.samples) : 0.0;
}

}  // namespace

void EvolveConfig::validate() const {
  if (population_size < 1) throw Error("evolve: population_size must be >= 1");
  double sum = 0.0;
  for (double p : operator_probs) {
    if (p < 0.0) throw Error("evolve: operator probabilities must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("evolve: operator probabilities must sum to 1");
  if (lambda < 0.0) throw Error("evolve: lambda must be >= 0");
  if (min_iterations < 1 || max_iterations < min_iterations) {
    throw Error("evolve: need 1 <= min_iterations <= max_iterations");
  }
  if (convergence_window < 1 || convergence_window > min_iterations) {
    throw Error("evolve: need 1 <= convergence_window <= min_iterations");
  }
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) {
    throw Error("evolve: elite_fraction in (0, 1]");
  }
  if (constraints.min_leaf < 1 || constraints.min_internal < 1 || constraints.max_depth < 1 ||
      constraints.max_leaves < 1) {
    throw Error("evolve: constraints must be >= 1");
  }
  if (jobs < 1) throw Error("evolve: jobs must be >= 1");
}

ScoredSample leaf_sample(const Tree& tree) {
  if (!tree.fitted()) throw Error("leaf_sample: tree is not fitted");
  std::vector<ScoredSample::Group> groups;
  for (const auto* n : tree.nodes()) {
    if (n->is_leaf()) groups.push_back({n->score, n->churners, n->samples - n->churners});
  }
  return ScoredSample::from_groups(std::move(groups));
}

double fitness(const Tree& tree, const ProfitParams& p, double lambda) {
  return empc(leaf_sample(tree), p).empc - lambda * tree.leaf_count();
}

std::vector<Tree> init_population(const Dataset& data, const SplitDomains& domains,
                                  const EvolveConfig& cfg, std::ostream* log) {
  if (data.n_rows() < cfg.constraints.min_leaf) {
    throw DataError("init_population: fewer rows than min_leaf");
  }
  std::vector<Tree> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population_size));
  std::int32_t fallbacks = 0;
  for (std::int32_t slot = 0; slot < cfg.population_size; ++slot) {
    Rng rng = make_stream(cfg.seed, 0, static_cast<std::uint64_t>(slot));
    bool placed = false;
    for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
      const auto col = random_usable_column(domains, rng);
      if (col < 0) break;
      auto rule = random_rule(data, domains, col, rng);
      if (!rule) continue;
      Tree t(data.schema());
      auto& root = t.root();
      root.rule = std::move(*rule);
      root.left = std::make_unique<TreeNode>();
      root.right = std::make_unique<TreeNode>();
      if (satisfies(t, data, cfg.constraints)) {
        pop.push_back(std::move(t));
        placed = true;
      }
    }
    if (!placed) {
      Tree t(data.schema());
      fit_leaves(t, data);
      pop.push_back(std::move(t));
      ++fallbacks;
    }
  }
  if (fallbacks > 0 && log) {
    *log << "evolve: " << fallbacks << " of " << cfg.population_size
         << " initial trees fell back to a single leaf\n";
  }
  return pop;
}

Tree mutate_split(const Tree& tree, const Dataset& data, const SplitDomains& domains,
                  const TreeConstraints& c, Rng& rng) {
  for (int attempt = 0; attempt < kOperatorRetries; ++attempt) {
    Tree t = tree;
    auto leaves = splittable_leaves(t, c);
    if (leaves.empty()) return tree;
    auto* leaf = pick(leaves, rng);
    const auto col = random_usable_column(domains, rng);
    if (col < 0) return tree;
    auto rule = random_rule(data, domains, col, rng);
    if (!rule) continue;
    leaf->rule = std::move(*rule);
    leaf->left = std::make_unique<TreeNode>();
    leaf->right = std::make_unique<TreeNode>();
    if (satisfies(t, data, c)) return t;
  }
  return tree;
}

Tree mutate_prune(const Tree& tree, const Dataset& data, Rng& rng) {
  Tree t = tree;
  std::vector<TreeNode*> prunable;
  for (auto* n : t.nodes()) {
    if (!n->is_leaf() && n->left->is_leaf() && n->right->is_leaf()) prunable.push_back(n);
  }
  if (prunable.empty()) return tree;  // single leaf
  collapse_to_leaf(*pick(prunable, rng));
  fit_leaves(t, data);  // collapsing cannot empty a leaf
  return t;
}

Tree mutate_major(const Tree& tree, const Dataset& data, const SplitDomains& domains,
                  const TreeConstraints& c, Rng& rng) {
  for (int attempt = 0; attempt < kOperatorRetries; ++attempt) {
    Tree t = tree;
    auto nodes = internal_nodes(t);
    if (nodes.empty()) return tree;
    auto* node = pick(nodes, rng);
    const auto col = random_usable_column(domains, rng);
    if (col < 0) return tree;
    auto rule = random_rule(data, domains, col, rng);
    if (!rule) continue;
    node->rule = std::move(*rule);
    if (satisfies(t, data, c)) return t;
  }
  return tree;
}

Tree mutate_minor(const Tree& tree, const Dataset& data, const SplitDomains& domains,
                  const TreeConstraints& c, Rng& rng) {
  for (int attempt = 0; attempt < kOperatorRetries; ++attempt) {
    Tree t = tree;
    auto nodes = internal_nodes(t);
    if (nodes.empty()) return tree;
    auto* node = pick(nodes, rng);
    auto& rule = node->rule;
    if (rule.kind == ColumnKind::categorical) {
      // toggle one level's side; empty or full subsets are rejected outright
      std::uniform_int_distribution<std::size_t> d(0, rule.left_levels.size() - 1);
      const auto l = d(rng);
      rule.left_levels[l] ^= 1;
      const auto picked = std::count(rule.left_levels.begin(), rule.left_levels.end(), 1);
      if (picked == 0 || picked == static_cast<std::int64_t>(rule.left_levels.size())) {
        return tree;
      }
    } else {
      const auto& mids = domains.columns[static_cast<std::size_t>(rule.column)].midpoints;
      const auto it = std::lower_bound(mids.begin(), mids.end(), rule.cutoff);
      std::int64_t idx = it - mids.begin();
      if (it == mids.end() || *it != rule.cutoff) {
        // cutoff not on the midpoint lattice (imported tree); snap to the
        // nearest position before stepping
        idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(mids.size()) - 1);
      }
      const bool step_left = (rng() & 1) != 0;
      const std::int64_t next = step_left ? idx - 1 : idx + 1;
      if (next < 0 || next >= static_cast<std::int64_t>(mids.size())) return tree;
      rule.cutoff = mids[static_cast<std::size_t>(next)];
    }
    if (satisfies(t, data, c)) return t;
  }
  return tree;
}

std::pair<Tree, Tree> crossover(const Tree& a, const Tree& b, const Dataset& data,
                                const TreeConstraints& c, Rng& rng) {
  Tree ca = a;
  Tree cb = b;
  auto nodes_a = ca.nodes();
  auto nodes_b = cb.nodes();
  auto* na = pick(nodes_a, rng);
  auto* nb = pick(nodes_b, rng);
  // exchange the whole subtrees in place
  std::swap(na->rule, nb->rule);
  std::swap(na->left, nb->left);
  std::swap(na->right, nb->right);
  std::swap(na->score, nb->score);
  if (!satisfies(ca, data, c)) ca = a;
  if (!satisfies(cb, data, c)) cb = b;
  return {std::move(ca), std::move(cb)};
}

namespace {

// EMPC keyed by the induced leaf partition; trees with the same leaf
// statistics share one evaluation
class FitnessCache {
 public:
  explicit FitnessCache(const ProfitParams& p) : params_(p) {}

  double empc_of(const Tree& tree) {
    auto sample = leaf_sample(tree);
    std::string key;
    key.reserve(sample.groups().size() * 24);
    for (const auto& g : sample.groups()) {
      char buf[24];
      std::memcpy(buf, &g.score, 8);
      std::memcpy(buf + 8, &g.churn, 8);
      std::memcpy(buf + 16, &g.nonchurn, 8);
      key.append(buf, 24);
    }
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    const double value = empc(sample, params_).empc;
    std::lock_guard<std::mutex> lock(mutex_);
    map_.emplace(std::move(key), value);
    return value;
  }

 private:
  ProfitParams params_;
  std::mutex mutex_;
  std::unordered_map<std::string, double> map_;
};

VariationOp draw_operator(const std::array<double, 5>& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) {
    acc += probs[static_cast<std::size_t>(i)];
    if (u < acc) return static_cast<VariationOp>(i);
  }
  return VariationOp::crossover;
}

}  // namespace

std::string trace_to_csv(const FitnessTrace& trace) {
  std::ostringstream out;
  out << "iteration,best,mean,best_size\n";
  for (const auto& row : trace.rows) {
    out << row.iteration << ',' << format_double(row.best) << ',' << format_double(row.mean)
        << ',' << row.best_size << '\n';
  }
  return out.str();
}

EvolveResult evolve(const Dataset& data, const ProfitParams& p, const EvolveConfig& cfg,
                    std::ostream* log) {
  cfg.validate();
  p.validate();
  if (data.churner_count() == 0 || data.churner_count() == data.n_rows()) {
    throw DataError("evolve: training data must hold both classes");
  }

  const SplitDomains domains = build_split_domains(data);
  std::vector<Tree> pop = init_population(data, domains, cfg, log);
  const auto pop_size = static_cast<std::size_t>(cfg.population_size);

  FitnessCache cache(p);
  auto fitness_of = [&](const Tree& t) { return cache.empc_of(t) - cfg.lambda * t.leaf_count(); };

  std::vector<double> fit(pop_size);
  for (std::size_t i = 0; i < pop_size; ++i) fit[i] = fitness_of(pop[i]);

  EvolveResult result;
  auto record = [&](std::int32_t iteration) {
    const auto best_it = std::max_element(fit.begin(), fit.end());
    const auto best_slot = static_cast<std::size_t>(best_it - fit.begin());
    const double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / double(pop_size);
    result.trace.rows.push_back(
        {iteration, *best_it, mean, pop[best_slot].leaf_count()});
    return best_slot;
  };
  record(0);

  const auto elite = static_cast<std::size_t>(
      std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                    std::ceil(cfg.elite_fraction * double(pop_size)))));
  auto elite_mean = [&] {
    std::vector<double> sorted(fit);
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(elite),
                      sorted.end(), std::greater<>());
    return std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(elite),
                           0.0) /
           double(elite);
  };

  double best_elite = -std::numeric_limits<double>::infinity();
  std::int32_t stall = 0;
  std::int32_t iteration = 0;

  std::vector<Tree> candidates(pop_size);
  std::vector<double> cand_fit(pop_size);

  while (iteration < cfg.max_iterations) {
    ++iteration;
    auto worker = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t slot = lo; slot < hi; ++slot) {
        Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(iteration), slot);
        const VariationOp op = draw_operator(cfg.operator_probs, rng);
        Tree cand;
        switch (op) {
          case VariationOp::split:
            cand = mutate_split(pop[slot], data, domains, cfg.constraints, rng);
            break;
          case VariationOp::prune:
            cand = mutate_prune(pop[slot], data, rng);
            break;
          case VariationOp::major_mutation:
            cand = mutate_major(pop[slot], data, domains, cfg.constraints, rng);
            break;
          case VariationOp::minor_mutation:
            cand = mutate_minor(pop[slot], data, domains, cfg.constraints, rng);
            break;
          case VariationOp::crossover: {
            std::uniform_int_distribution<std::size_t> d(0, pop_size - 1);
            const auto partner = d(rng);
            cand = crossover(pop[slot], pop[partner], data, cfg.constraints, rng).first;
            break;
          }
        }
        cand_fit[slot] = fitness_of(cand);
        candidates[slot] = std::move(cand);
      }
    };

    const auto jobs = static_cast<std::size_t>(std::min<std::int64_t>(cfg.jobs, std::int64_t(pop_size)));
    if (jobs <= 1) {
      worker(0, pop_size);
    } else {
      std::vector<std::thread> threads;
      const std::size_t chunk = (pop_size + jobs - 1) / jobs;
      for (std::size_t j = 1; j < jobs; ++j) {
        const std::size_t lo = j * chunk;
        if (lo >= pop_size) break;
        threads.emplace_back(worker, lo, std::min(pop_size, lo + chunk));
      }
      worker(0, std::min(pop_size, chunk));
      for (auto& t : threads) t.join();
    }

    // ordered elitist replacement: each slot keeps the fitter of incumbent
    // and candidate, so the best fitness never decreases
    for (std::size_t slot = 0; slot < pop_size; ++slot) {
      if (cand_fit[slot] > fit[slot]) {
        pop[slot] = std::move(candidates[slot]);
        fit[slot] = cand_fit[slot];
      }
    }

    if (cfg.validate_each_iteration) {
      for (auto& t : pop) {
        if (!check_constraints(t, cfg.constraints).empty()) {
          throw Error("evolve: constraint violation in generation " + std::to_string(iteration));
        }
      }
    }

    record(iteration);

    const double em = elite_mean();
    if (em > best_elite + kImprovementTol) {
      best_elite = em;
      stall = 0;
    } else {
      ++stall;
    }
    if (iteration >= cfg.min_iterations && stall >= cfg.convergence_window) break;
  }

  const auto best_it = std::max_element(fit.begin(), fit.end());
  const auto best_slot = static_cast<std::size_t>(best_it - fit.begin());
  result.best = pop[best_slot];
  result.best_fitness = *best_it;
  result.iterations = iteration;
  if (log) {
    *log << "evolve: stopped after " << iteration << " iterations, best fitness "
         << result.best_fitness << ", " << result.best.leaf_count() << " leaves\n";
  }
  return result;
}

}  // namespace proftree
