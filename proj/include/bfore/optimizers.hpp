#pragma once

#include "bfore/rng.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace bfore {

/// Axis-aligned box. Invariant: lower < upper in every dimension.
struct SearchSpace {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  SearchSpace() = default;
  SearchSpace(Eigen::VectorXd lo, Eigen::VectorXd hi);

  static SearchSpace msrcr();
  static SearchSpace lagc_anlm();
  /// MSRCR coordinates followed by LAGC/ANLM coordinates.
  static SearchSpace full();

  int dim() const noexcept { return static_cast<int>(lower.size()); }
  Eigen::VectorXd scale() const { return upper - lower; }
  Eigen::VectorXd clamp(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;
};

/// Maximised. Must be safe to call concurrently.
using FitnessFn = std::function<double(const Eigen::VectorXd&)>;

/// Observes every candidate before it is evaluated: (iteration, index, position).
using CandidateHook = std::function<void(int, int, const Eigen::VectorXd&)>;

struct EvalOptions {
  int workers = 1;
  /// Hard cap on fitness evaluations; 0 means unlimited.
  long max_evals = 0;
  CandidateHook on_candidate;
};

struct BoaConfig {
  int population = 12;
  int iterations = 15;
  double switch_prob = 0.8;
  double c_start = 0.01;
  double c_end = 0.05;
  double power = 0.1;
  double levy_prob = 0.15;
  double levy_beta = 1.5;
  double levy_scale = 0.01;
  std::uint64_t seed = 42;

  void validate() const;
  nlohmann::json to_json() const;
};

struct FaConfig {
  int population = 12;
  int iterations = 10;
  double beta0 = 1.0;
  double gamma = 1.0;
  double alpha0 = 0.5;
  double alpha_decay = 0.9;
  bool warm_start = true;
  std::uint64_t seed = 42;

  void validate() const;
  nlohmann::json to_json() const;
};

struct IterationRecord {
  int iter = 0;
  double best_fitness = 0.0;
  long evals_so_far = 0;
};

/// Trace of one optimisation. Invariant: best_fitness in `trace` is non-decreasing.
struct OptRun {
  std::vector<IterationRecord> trace;
  long evaluations = 0;
  long rejected = 0;
  Eigen::VectorXd best_params;
  double best_fitness = 0.0;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config;

  /// {seed, config, iterations: [{iter, best_fitness, evals_so_far}], best_params}.
  nlohmann::json to_json() const;
};

/// Mantegna's sigma_u for index beta.
double mantegna_sigma(double beta);

/// One Mantegna Levy step per dimension: u / |v|^(1/beta), u ~ N(0, sigma_u^2), v ~ N(0, 1).
Eigen::VectorXd levy_step(Rng& rng, int dim, double beta);

/// Butterfly optimisation. Evaluations = population * (iterations + 1), unless capped.
/// `inject` replaces the first initial candidate.
OptRun boa_optimize(const FitnessFn& fitness, const SearchSpace& space, const BoaConfig& cfg,
                    const EvalOptions& opts = {}, const std::optional<Eigen::VectorXd>& inject = std::nullopt);

/// Firefly algorithm with range-normalised distances. Evaluations = population * (iterations + 1),
/// unless capped. With cfg.warm_start, `warm_start` replaces the first initial candidate.
OptRun fa_optimize(const FitnessFn& fitness, const SearchSpace& space, const FaConfig& cfg,
                   const EvalOptions& opts = {}, const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// `budget` i.i.d. uniform samples. Sample k depends only on (seed, k), so a larger
/// budget extends a smaller one. One trace entry per sample.
OptRun random_search(const FitnessFn& fitness, const SearchSpace& space, long budget, std::uint64_t seed,
                     const EvalOptions& opts = {});

} // namespace bfore
