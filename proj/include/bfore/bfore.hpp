#pragma once

#include "bfore/image.hpp"
#include "bfore/optimizers.hpp"
#include "bfore/pipeline.hpp"
#include "bfore/quality.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bfore {

/// Population and iteration counts shared by both phases.
struct BudgetConfig {
  int population = 12;
  int boa_iterations = 15;
  int fa_iterations = 10;

  /// Full budget: N = 12, T_BOA = 15, T_FA = 10.
  static BudgetConfig full() { return {12, 15, 10}; }
  /// Lightweight budget: N = 5, T_BOA = 6, T_FA = 4.
  static BudgetConfig light() { return {5, 6, 4}; }

  /// N (T_BOA + 1) + N (T_FA + 1).
  long evaluations() const {
    return static_cast<long>(population) * (boa_iterations + 1) + static_cast<long>(population) * (fa_iterations + 1);
  }
  nlohmann::json to_json() const;
  bool operator==(const BudgetConfig&) const = default;
};

/// Resolves "full" or "light"; throws ContractError otherwise.
BudgetConfig budget_preset(std::string_view name);

/// Splits a total evaluation budget into a two-phase configuration whose
/// evaluations() equals `budget` exactly. N divides the budget and is the
/// divisor closest to sqrt(budget / 2); the remaining iterations go 60/40 to
/// BOA/FA. Needs budget >= 8.
BudgetConfig budget_to_config(long budget);

struct BforeOptions {
  BudgetConfig budget = BudgetConfig::light();
  std::uint64_t seed = 42;
  EvalOptions eval;
  GnsTargets targets;
};

struct BforeResult {
  PipelineParams params;
  ImageBuffer image;
  GnsScore score;
  OptRun boa;
  OptRun fa;

  long evaluations() const { return boa.evaluations + fa.evaluations; }
};

/// Phase 1: BOA over the MSRCR box with LAGC/ANLM at defaults and the default
/// MSRCR vector injected. Phase 2: FA over the LAGC/ANLM box with the Phase-1
/// winner fixed, warm-started at defaults. Fitness is GNS of the pipeline output.
BforeResult bfore_optimize(const ImageBuffer& img, const BforeOptions& options);

/// Pipeline output at default parameters. Consumes no randomness.
ImageBuffer bfore_default(const ImageBuffer& img);

enum class Variant { Full, BoaOnly, FaOnly, Random };

std::string_view to_string(Variant v);

struct VariantResult {
  Variant variant = Variant::Full;
  PipelineParams params;
  ImageBuffer image;
  GnsScore score;
  long evaluations = 0;
  std::vector<OptRun> runs;
};

/// The four ablation variants, each spending exactly `budget` evaluations.
std::vector<VariantResult> ablation_variants(const ImageBuffer& img, long budget, std::uint64_t seed,
                                             const EvalOptions& eval = {}, const GnsTargets& targets = {});

/// Random search over all 16 parameters with the GNS fitness.
VariantResult random_variant(const ImageBuffer& img, long budget, std::uint64_t seed, const EvalOptions& eval = {},
                             const GnsTargets& targets = {});

} // namespace bfore
