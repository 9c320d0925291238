#include "bfore/bfore.hpp"

#include "bfore/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bfore {

nlohmann::json BudgetConfig::to_json() const {
  return {{"population", population},
          {"boa_iterations", boa_iterations},
          {"fa_iterations", fa_iterations},
          {"evaluations", evaluations()}};
}

BudgetConfig budget_preset(std::string_view name) {
  if (name == "full") return BudgetConfig::full();
  if (name == "light") return BudgetConfig::light();
  throw ContractError("unknown budget preset '" + std::string(name) + "' (expected full or light)");
}

BudgetConfig budget_to_config(long budget) {
  if (budget < 8) throw ContractError("budget_to_config: budget must be at least 8, got " + std::to_string(budget));
  const double target = std::sqrt(static_cast<double>(budget) / 2.0);
  long best_n = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (long n = 2; n * 4 <= budget; ++n) {
    if (budget % n != 0) continue;
    const double gap = std::abs(static_cast<double>(n) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best_n = n;
    }
  }
  if (best_n == 0) throw ContractError("budget_to_config: no population size divides " + std::to_string(budget));
  const long steps = budget / best_n - 2;
  const long fa = std::lround(0.4 * static_cast<double>(steps));
  return {static_cast<int>(best_n), static_cast<int>(steps - fa), static_cast<int>(fa)};
}

namespace {

BoaConfig boa_config(int population, int iterations, std::uint64_t seed) {
  BoaConfig cfg;
  cfg.population = population;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return cfg;
}

FaConfig fa_config(int population, int iterations, std::uint64_t seed) {
  FaConfig cfg;
  cfg.population = population;
  cfg.iterations = iterations;
  cfg.seed = seed;
  return cfg;
}

FitnessFn msrcr_fitness(const ImageBuffer& pre, const GnsTargets& targets) {
  return [&pre, &targets](const Eigen::VectorXd& x) {
    return gns(msrcr(pre, MsrcrParams::from_vector(x)), targets).total;
  };
}

FitnessFn lagc_fitness(const ImageBuffer& img, const MsrcrParams& fixed, const GnsTargets& targets) {
  return [&img, fixed, &targets](const Eigen::VectorXd& x) {
    return gns(run_pipeline(img, {fixed, LagcAnlmParams::from_vector(x)}), targets).total;
  };
}

VariantResult finish_variant(Variant v, const ImageBuffer& img, const PipelineParams& params, const GnsTargets& targets,
                             std::vector<OptRun> runs) {
  VariantResult r;
  r.variant = v;
  r.params = params;
  r.image = run_pipeline(img, params);
  r.score = gns(r.image, targets);
  for (const auto& run : runs) r.evaluations += run.evaluations;
  r.runs = std::move(runs);
  return r;
}

} // namespace

BforeResult bfore_optimize(const ImageBuffer& img, const BforeOptions& options) {
  require_colorspace(img, ColorSpace::RGB, "bfore_optimize");
  options.targets.validate();
  const BudgetConfig& b = options.budget;

  const ImageBuffer pre = pre_msrcr_stages(img, LagcAnlmParams::defaults());
  BforeResult result;
  result.boa = boa_optimize(msrcr_fitness(pre, options.targets), SearchSpace::msrcr(),
                            boa_config(b.population, b.boa_iterations, options.seed), options.eval,
                            MsrcrParams::defaults().to_vector());
  const MsrcrParams winner = MsrcrParams::from_vector(result.boa.best_params);

  result.fa = fa_optimize(lagc_fitness(img, winner, options.targets), SearchSpace::lagc_anlm(),
                          fa_config(b.population, b.fa_iterations, options.seed), options.eval,
                          LagcAnlmParams::defaults().to_vector());

  result.params = {winner, LagcAnlmParams::from_vector(result.fa.best_params)};
  result.image = run_pipeline(img, result.params);
  result.score = gns(result.image, options.targets);
  return result;
}

ImageBuffer bfore_default(const ImageBuffer& img) { return run_pipeline(img, PipelineParams::defaults()); }

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::BoaOnly: return "boa_only";
    case Variant::FaOnly: return "fa_only";
    case Variant::Random: return "random";
  }
  return "?";
}

VariantResult random_variant(const ImageBuffer& img, long budget, std::uint64_t seed, const EvalOptions& eval,
                             const GnsTargets& targets) {
  require_colorspace(img, ColorSpace::RGB, "random_variant");
  const FitnessFn f = [&img, &targets](const Eigen::VectorXd& x) {
    return gns(run_pipeline(img, PipelineParams::from_vector(x)), targets).total;
  };
  OptRun run = random_search(f, SearchSpace::full(), budget, seed, eval);
  const PipelineParams params = PipelineParams::from_vector(run.best_params);
  return finish_variant(Variant::Random, img, params, targets, {std::move(run)});
}

std::vector<VariantResult> ablation_variants(const ImageBuffer& img, long budget, std::uint64_t seed,
                                             const EvalOptions& eval, const GnsTargets& targets) {
  require_colorspace(img, ColorSpace::RGB, "ablation_variants");
  const BudgetConfig two_phase = budget_to_config(budget);
  const int n = two_phase.population;
  const int single_iters = static_cast<int>(budget / n) - 1;
  EvalOptions capped = eval;
  capped.max_evals = budget;

  std::vector<VariantResult> out;

  BforeOptions full_opts;
  full_opts.budget = two_phase;
  full_opts.seed = seed;
  full_opts.eval = eval;
  full_opts.targets = targets;
  BforeResult full = bfore_optimize(img, full_opts);
  out.push_back(finish_variant(Variant::Full, img, full.params, targets, {std::move(full.boa), std::move(full.fa)}));

  const ImageBuffer pre = pre_msrcr_stages(img, LagcAnlmParams::defaults());
  OptRun boa = boa_optimize(msrcr_fitness(pre, targets), SearchSpace::msrcr(), boa_config(n, single_iters, seed), capped,
                            MsrcrParams::defaults().to_vector());
  const PipelineParams boa_params{MsrcrParams::from_vector(boa.best_params), LagcAnlmParams::defaults()};
  out.push_back(finish_variant(Variant::BoaOnly, img, boa_params, targets, {std::move(boa)}));

  OptRun fa = fa_optimize(lagc_fitness(img, MsrcrParams::defaults(), targets), SearchSpace::lagc_anlm(),
                          fa_config(n, single_iters, seed), capped, LagcAnlmParams::defaults().to_vector());
  const PipelineParams fa_params{MsrcrParams::defaults(), LagcAnlmParams::from_vector(fa.best_params)};
  out.push_back(finish_variant(Variant::FaOnly, img, fa_params, targets, {std::move(fa)}));

  out.push_back(random_variant(img, budget, seed, capped, targets));

  for (const auto& v : out)
    if (v.evaluations != budget)
      throw Error("ablation_variants: " + std::string(to_string(v.variant)) + " spent " + std::to_string(v.evaluations) +
                  " evaluations, expected " + std::to_string(budget));
  return out;
}

} // namespace bfore
