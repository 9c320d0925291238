#include "bfore/bfore.hpp"
#include "bfore/errors.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace bfore;
using bfore::test::dark_scene;

TEST(Budget, Presets) {
  EXPECT_EQ(budget_preset("light"), (BudgetConfig{5, 6, 4}));
  EXPECT_EQ(budget_preset("full"), (BudgetConfig{12, 15, 10}));
  EXPECT_EQ(BudgetConfig::light().evaluations(), 5 * 7 + 5 * 5);
  EXPECT_EQ(BudgetConfig::full().evaluations(), 12 * 16 + 12 * 11);
  EXPECT_THROW(budget_preset("medium"), ContractError);
  const nlohmann::json j = BudgetConfig::full().to_json();
  EXPECT_EQ(j.at("evaluations"), 324);
}

TEST(Budget, ToConfigExamples) {
  EXPECT_EQ(budget_to_config(50), (BudgetConfig{5, 5, 3}));
  EXPECT_EQ(budget_to_config(128), (BudgetConfig{8, 8, 6}));
  EXPECT_EQ(budget_to_config(300), (BudgetConfig{12, 14, 9}));
  EXPECT_THROW(budget_to_config(7), ContractError);
  EXPECT_THROW(budget_to_config(13), ContractError);
}

TEST(Budget, ToConfigSpendsExactBudget) {
  for (long b = 8; b <= 1000; ++b) {
    bool has_divisor = false;
    for (long n = 2; n * 4 <= b; ++n) has_divisor |= b % n == 0;
    if (!has_divisor) {
      EXPECT_THROW(budget_to_config(b), ContractError) << b;
      continue;
    }
    const BudgetConfig c = budget_to_config(b);
    EXPECT_EQ(c.evaluations(), b);
    EXPECT_GE(c.population, 2);
    EXPECT_GE(c.boa_iterations, 0);
    EXPECT_GE(c.fa_iterations, 0);
    EXPECT_GE(c.boa_iterations, c.fa_iterations);
  }
}

TEST(Bfore, NeverWorseThanDefaults) {
  BforeOptions opts;
  opts.budget = {4, 2, 2};
  for (std::uint64_t s : {1u, 2u}) {
    const ImageBuffer img = dark_scene(40, 30, s);
    opts.seed = s;
    const BforeResult r = bfore_optimize(img, opts);
    const double base = gns(bfore_default(img)).total;
    EXPECT_GE(r.score.total, base);
    EXPECT_EQ(r.score.total, r.fa.best_fitness);
    EXPECT_GE(r.fa.best_fitness, r.boa.best_fitness);
    EXPECT_EQ(r.evaluations(), opts.budget.evaluations());
    EXPECT_NO_THROW(r.params.validate());
  }
}

TEST(Bfore, SameSeedSameResult) {
  const ImageBuffer img = dark_scene(36, 28, 3);
  BforeOptions opts;
  opts.budget = {3, 2, 1};
  opts.seed = 17;
  const BforeResult a = bfore_optimize(img, opts);
  const BforeResult b = bfore_optimize(img, opts);
  EXPECT_EQ(a.params, b.params);
  EXPECT_TRUE(a.image == b.image);
  EXPECT_EQ(a.score.total, b.score.total);
}

TEST(Bfore, WorkerCountDoesNotChangeResult) {
  const ImageBuffer img = dark_scene(32, 24, 4);
  BforeOptions opts;
  opts.budget = {3, 1, 1};
  const BforeResult serial = bfore_optimize(img, opts);
  opts.eval.workers = 3;
  const BforeResult parallel = bfore_optimize(img, opts);
  EXPECT_EQ(serial.params, parallel.params);
}

TEST(Bfore, DefaultIsPipelineAtDefaults) {
  const ImageBuffer img = dark_scene(30, 20, 5);
  EXPECT_TRUE(bfore_default(img) == run_pipeline(img, PipelineParams::defaults()));
  EXPECT_THROW(bfore_optimize(rgb_to_hsv(img), BforeOptions{}), ContractError);
}

TEST(Ablation, EqualBudgetsAndFrozenComponents) {
  const ImageBuffer img = dark_scene(32, 24, 6);
  const long budget = 50;
  const std::vector<VariantResult> v = ablation_variants(img, budget, 9);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v[0].variant, Variant::Full);
  EXPECT_EQ(v[1].variant, Variant::BoaOnly);
  EXPECT_EQ(v[2].variant, Variant::FaOnly);
  EXPECT_EQ(v[3].variant, Variant::Random);
  for (const auto& r : v) {
    EXPECT_EQ(r.evaluations, budget) << to_string(r.variant);
    EXPECT_EQ(r.score.total, gns(run_pipeline(img, r.params)).total);
  }
  EXPECT_EQ(v[1].params.lagc_anlm, LagcAnlmParams::defaults());
  EXPECT_EQ(v[2].params.msrcr, MsrcrParams::defaults());
  const double base = gns(bfore_default(img)).total;
  EXPECT_GE(v[0].score.total, base);
  EXPECT_GE(v[1].score.total, base);
  EXPECT_GE(v[2].score.total, base);
  EXPECT_EQ(to_string(Variant::FaOnly), "fa_only");
}
