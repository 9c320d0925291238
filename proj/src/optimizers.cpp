#include "bfore/optimizers.hpp"

#include "bfore/errors.hpp"
#include "bfore/parallel.hpp"
#include "bfore/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bfore {

namespace {

constexpr std::uint64_t kStreamInit = 0x1001;
constexpr std::uint64_t kStreamBoa = 0x1002;
constexpr std::uint64_t kStreamFa = 0x1003;
constexpr std::uint64_t kStreamRandom = 0x1004;

constexpr double kRejected = -std::numeric_limits<double>::infinity();

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Evaluates batches under the shared cap and counts rejected (non-finite) results.
class Evaluator {
public:
  Evaluator(const FitnessFn& fn, const EvalOptions& opts) : fn_(fn), opts_(opts) {}

  // Evaluates the first k candidates, k limited by the remaining budget; returns k.
  std::size_t run(int iter, const std::vector<Eigen::VectorXd>& cands, std::vector<double>& out) {
    std::size_t k = cands.size();
    if (opts_.max_evals > 0) k = std::min<std::size_t>(k, static_cast<std::size_t>(std::max(0L, opts_.max_evals - evals_)));
    if (opts_.on_candidate)
      for (std::size_t i = 0; i < k; ++i) opts_.on_candidate(iter, static_cast<int>(i), cands[i]);
    out.resize(cands.size());
    parallel_for(k, opts_.workers, [&](std::size_t i) { out[i] = fn_(cands[i]); });
    for (std::size_t i = 0; i < k; ++i) {
      if (!std::isfinite(out[i])) {
        out[i] = kRejected;
        ++rejected_;
      }
    }
    evals_ += static_cast<long>(k);
    return k;
  }

  bool exhausted() const { return opts_.max_evals > 0 && evals_ >= opts_.max_evals; }
  long evals() const { return evals_; }
  long rejected() const { return rejected_; }

private:
  const FitnessFn& fn_;
  const EvalOptions& opts_;
  long evals_ = 0;
  long rejected_ = 0;
};

struct Best {
  Eigen::VectorXd params;
  double fitness = kRejected;
  bool set = false;

  // Strict improvement only: the first candidate seen keeps ties.
  void offer(const Eigen::VectorXd& x, double f) {
    if (!set || f > fitness) {
      params = x;
      fitness = f;
      set = true;
    }
  }
};

void check_space(const SearchSpace& space) {
  if (space.dim() == 0) throw ContractError("search space is empty");
  if (space.upper.size() != space.lower.size()) throw ContractError("search space bounds differ in length");
}

OptRun finish(const Best& best, const Evaluator& ev, std::vector<IterationRecord> trace, std::uint64_t seed,
              nlohmann::json config, std::chrono::steady_clock::time_point start) {
  OptRun run;
  run.trace = std::move(trace);
  run.evaluations = ev.evals();
  run.rejected = ev.rejected();
  run.best_params = best.params;
  run.best_fitness = best.fitness;
  run.seed = seed;
  run.config = std::move(config);
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

std::vector<Eigen::VectorXd> initial_population(const SearchSpace& space, int n, std::uint64_t seed,
                                                const std::optional<Eigen::VectorXd>& seed_candidate) {
  std::vector<Eigen::VectorXd> pop(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {kStreamInit, static_cast<std::uint64_t>(i)}));
    pop[static_cast<std::size_t>(i)] = space.sample(rng);
  }
  if (seed_candidate) {
    if (seed_candidate->size() != space.dim()) throw ContractError("seed candidate has wrong dimension");
    pop[0] = space.clamp(*seed_candidate);
  }
  return pop;
}

} // namespace

// ---------------------------------------------------------------------------

SearchSpace::SearchSpace(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw ContractError("SearchSpace: bounds differ in length");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i])) throw ContractError("SearchSpace: lower must be below upper in dimension " + std::to_string(i));
}

SearchSpace SearchSpace::msrcr() { return {MsrcrParams::lower_bounds(), MsrcrParams::upper_bounds()}; }

SearchSpace SearchSpace::lagc_anlm() { return {LagcAnlmParams::lower_bounds(), LagcAnlmParams::upper_bounds()}; }

SearchSpace SearchSpace::full() {
  Eigen::VectorXd lo(PipelineParams::kDim), hi(PipelineParams::kDim);
  lo << MsrcrParams::lower_bounds(), LagcAnlmParams::lower_bounds();
  hi << MsrcrParams::upper_bounds(), LagcAnlmParams::upper_bounds();
  return {lo, hi};
}

bool SearchSpace::contains(const Eigen::VectorXd& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Eigen::VectorXd SearchSpace::sample(Rng& rng) const {
  Eigen::VectorXd x(dim());
  for (int d = 0; d < dim(); ++d) x[d] = rng.uniform(lower[d], upper[d]);
  return x;
}

void BoaConfig::validate() const {
  if (population < 1 || iterations < 0) throw ContractError("BoaConfig: population >= 1 and iterations >= 0 required");
  if (switch_prob < 0.0 || switch_prob > 1.0 || levy_prob < 0.0 || levy_prob > 1.0)
    throw ContractError("BoaConfig: probabilities must lie in [0, 1]");
  if (!(levy_beta > 0.0 && levy_beta <= 2.0)) throw ContractError("BoaConfig: levy_beta must lie in (0, 2]");
}

nlohmann::json BoaConfig::to_json() const {
  return {{"population", population}, {"iterations", iterations}, {"switch_prob", switch_prob},
          {"c_start", c_start},       {"c_end", c_end},           {"power", power},
          {"levy_prob", levy_prob},   {"levy_beta", levy_beta},   {"levy_scale", levy_scale},
          {"seed", seed}};
}

void FaConfig::validate() const {
  if (population < 1 || iterations < 0) throw ContractError("FaConfig: population >= 1 and iterations >= 0 required");
  if (beta0 < 0.0 || gamma < 0.0 || alpha0 < 0.0) throw ContractError("FaConfig: beta0, gamma, alpha0 must be >= 0");
}

nlohmann::json FaConfig::to_json() const {
  return {{"population", population}, {"iterations", iterations}, {"beta0", beta0},
          {"gamma", gamma},           {"alpha0", alpha0},         {"alpha_decay", alpha_decay},
          {"warm_start", warm_start}, {"seed", seed}};
}

nlohmann::json OptRun::to_json() const {
  nlohmann::json iters = nlohmann::json::array();
  for (const auto& r : trace) iters.push_back({{"iter", r.iter}, {"best_fitness", r.best_fitness}, {"evals_so_far", r.evals_so_far}});
  return {{"seed", seed},
          {"config", config},
          {"iterations", iters},
          {"best_params", to_std(best_params)},
          {"best_fitness", best_fitness},
          {"evaluations", evaluations},
          {"rejected", rejected}};
}

// ---------------------------------------------------------------------------

double mantegna_sigma(double beta) {
  const double num = std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0);
  const double den = std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0);
  return std::pow(num / den, 1.0 / beta);
}

Eigen::VectorXd levy_step(Rng& rng, int dim, double beta) {
  const double sigma_u = mantegna_sigma(beta);
  Eigen::VectorXd step(dim);
  for (int d = 0; d < dim; ++d) {
    const double u = rng.normal() * sigma_u;
    double v = std::abs(rng.normal());
    while (v == 0.0) v = std::abs(rng.normal());
    step[d] = u / std::pow(v, 1.0 / beta);
  }
  return step;
}

// ---------------------------------------------------------------------------

OptRun boa_optimize(const FitnessFn& fitness, const SearchSpace& space, const BoaConfig& cfg, const EvalOptions& opts,
                    const std::optional<Eigen::VectorXd>& inject) {
  cfg.validate();
  check_space(space);
  const auto start = std::chrono::steady_clock::now();
  const int n = cfg.population;
  const Eigen::VectorXd s = space.scale();
  Evaluator ev(fitness, opts);

  std::vector<Eigen::VectorXd> pop = initial_population(space, n, cfg.seed, inject);
  std::vector<double> fit;
  const std::size_t k0 = ev.run(0, pop, fit);
  pop.resize(k0);
  fit.resize(k0);

  Best best;
  double min_seen = std::numeric_limits<double>::infinity();
  auto absorb = [&](std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      best.offer(pop[i], fit[i]);
      if (std::isfinite(fit[i])) min_seen = std::min(min_seen, fit[i]);
    }
  };
  absorb(k0);
  std::vector<IterationRecord> trace{{0, best.fitness, ev.evals()}};

  for (int t = 1; t <= cfg.iterations && !ev.exhausted() && !pop.empty(); ++t) {
    const double c = cfg.iterations > 1
                         ? cfg.c_start + (static_cast<double>(t - 1) / (cfg.iterations - 1)) * (cfg.c_end - cfg.c_start)
                         : cfg.c_start;
    const double shift = min_seen <= 0.0 ? 1.0 - min_seen : 0.0;
    const std::vector<Eigen::VectorXd> snapshot = pop;
    const std::vector<double> snapshot_fit = fit;
    const auto m = static_cast<std::uint64_t>(snapshot.size());

    std::vector<Eigen::VectorXd> next(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
      Rng rng(derive_seed(cfg.seed, {kStreamBoa, static_cast<std::uint64_t>(t), i}));
      const double fragrance = std::isfinite(snapshot_fit[i]) ? c * std::pow(snapshot_fit[i] + shift, cfg.power) : 0.0;
      const double r = rng.uniform();
      Eigen::VectorXd x = snapshot[i];
      if (rng.uniform() < cfg.switch_prob) {
        x += (r * r * fragrance) * (best.params - x);
      } else {
        const std::size_t j = rng.index(m);
        const std::size_t k = rng.index(m);
        x += (r * r * fragrance) * (snapshot[j] - snapshot[k]);
      }
      if (rng.uniform() < cfg.levy_prob) x += cfg.levy_scale * levy_step(rng, space.dim(), cfg.levy_beta).cwiseProduct(s);
      next[i] = space.clamp(x);
    }

    std::vector<double> next_fit;
    const std::size_t k = ev.run(t, next, next_fit);
    for (std::size_t i = 0; i < k; ++i) {
      pop[i] = next[i];
      fit[i] = next_fit[i];
    }
    absorb(k);
    trace.push_back({t, best.fitness, ev.evals()});
  }
  return finish(best, ev, std::move(trace), cfg.seed, cfg.to_json(), start);
}

OptRun fa_optimize(const FitnessFn& fitness, const SearchSpace& space, const FaConfig& cfg, const EvalOptions& opts,
                   const std::optional<Eigen::VectorXd>& warm_start) {
  cfg.validate();
  check_space(space);
  const auto start = std::chrono::steady_clock::now();
  const int n = cfg.population;
  const int d = space.dim();
  const Eigen::VectorXd s = space.scale();
  Evaluator ev(fitness, opts);

  std::vector<Eigen::VectorXd> pop =
      initial_population(space, n, cfg.seed ^ 0x5A5A5A5A5A5A5A5AULL, cfg.warm_start ? warm_start : std::nullopt);
  std::vector<double> fit;
  const std::size_t k0 = ev.run(0, pop, fit);
  pop.resize(k0);
  fit.resize(k0);

  Best best;
  for (std::size_t i = 0; i < k0; ++i) best.offer(pop[i], fit[i]);
  std::vector<IterationRecord> trace{{0, best.fitness, ev.evals()}};

  for (int t = 1; t <= cfg.iterations && !ev.exhausted() && !pop.empty(); ++t) {
    const double alpha = cfg.alpha0 * std::pow(cfg.alpha_decay, t - 1);
    const std::vector<Eigen::VectorXd> snapshot = pop;
    const std::vector<double> snapshot_fit = fit;

    std::vector<Eigen::VectorXd> next(snapshot.size());
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
      Rng rng(derive_seed(cfg.seed, {kStreamFa, static_cast<std::uint64_t>(t), i}));
      auto random_walk = [&] {
        Eigen::VectorXd u(d);
        for (int q = 0; q < d; ++q) u[q] = rng.uniform() - 0.5;
        return Eigen::VectorXd(alpha * s.cwiseProduct(u));
      };
      Eigen::VectorXd x = snapshot[i];
      bool moved = false;
      for (std::size_t j = 0; j < snapshot.size(); ++j) {
        if (!(snapshot_fit[j] > snapshot_fit[i])) continue;
        const double r2 = (x - snapshot[j]).cwiseQuotient(s).squaredNorm();
        const double beta = cfg.beta0 * std::exp(-cfg.gamma * r2);
        x = space.clamp(x + beta * (snapshot[j] - x) + random_walk());
        moved = true;
      }
      if (!moved) x = space.clamp(x + random_walk());
      next[i] = x;
    }

    std::vector<double> next_fit;
    const std::size_t k = ev.run(t, next, next_fit);
    for (std::size_t i = 0; i < k; ++i) {
      pop[i] = next[i];
      fit[i] = next_fit[i];
      best.offer(pop[i], fit[i]);
    }
    trace.push_back({t, best.fitness, ev.evals()});
  }
  return finish(best, ev, std::move(trace), cfg.seed, cfg.to_json(), start);
}

OptRun random_search(const FitnessFn& fitness, const SearchSpace& space, long budget, std::uint64_t seed,
                     const EvalOptions& opts) {
  if (budget < 1) throw ContractError("random_search: budget must be positive");
  check_space(space);
  const auto start = std::chrono::steady_clock::now();
  Evaluator ev(fitness, opts);

  std::vector<Eigen::VectorXd> samples(static_cast<std::size_t>(budget));
  for (long k = 0; k < budget; ++k) {
    Rng rng(derive_seed(seed, {kStreamRandom, static_cast<std::uint64_t>(k)}));
    samples[static_cast<std::size_t>(k)] = space.sample(rng);
  }
  std::vector<double> fit;
  const std::size_t done = ev.run(1, samples, fit);

  Best best;
  std::vector<IterationRecord> trace;
  trace.reserve(done);
  for (std::size_t k = 0; k < done; ++k) {
    best.offer(samples[k], fit[k]);
    trace.push_back({static_cast<int>(k + 1), best.fitness, static_cast<long>(k + 1)});
  }
  return finish(best, ev, std::move(trace), seed, {{"budget", budget}, {"seed", seed}}, start);
}

} // namespace bfore
