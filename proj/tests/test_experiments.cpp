#include "bfore/errors.hpp"
#include "bfore/experiments.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace bfore;
using bfore::test::TempDir;
namespace fs = std::filesystem;

namespace {

PairedDataset tiny_corpus(const TempDir& dir, int count = 2) {
  SyntheticSpec spec;
  spec.count = count;
  spec.width = 40;
  spec.height = 32;
  return generate_synthetic(spec, dir.path()).dataset;
}

MetricRow fixture_row(const std::string& id, const std::string& method, double gns_value, bool paired) {
  MetricRow r;
  r.image_id = id;
  r.method = method;
  r.gns = gns_value;
  r.entropy = 7.0 + gns_value;
  r.ag = 5.5;
  r.sd = 50.0;
  r.mean = 110.0;
  if (paired) {
    r.psnr = 15.0 + 10 * gns_value;
    r.ssim = gns_value * 0.8;
  }
  return r;
}

ExperimentReport fixture_report(bool paired) {
  ExperimentReport r;
  r.suite = "comparison";
  r.dataset_hash = "00000000deadbeef";
  r.manifest = {{"origin", paired ? "SYNTHETIC" : "UNPAIRED"},
                {"seed", 1},
                {"entries", nlohmann::json::array({{{"id", "a"}}, {{"id", "b"}}, {{"id", "c"}}})}};
  r.seed = 7;
  r.config = {{"methods", {"bfore", "he", "clahe"}}};
  const double g[3][3] = {{0.91, 0.70, 0.80}, {0.88, 0.72, 0.79}, {0.93, 0.65, 0.85}};
  const char* ids[3] = {"a", "b", "c"};
  const char* methods[3] = {"bfore", "he", "clahe"};
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m) r.rows.push_back(fixture_row(ids[i], methods[m], g[i][m], paired));
  PairedTestResult t;
  t.method_a = "bfore";
  t.method_b = "he";
  t.metric = "gns";
  const std::vector<double> a = {0.91, 0.88, 0.93}, b = {0.70, 0.72, 0.65};
  t.wilcoxon = wilcoxon_signed_rank(a, b);
  t.comparisons = 2;
  t.p_bonferroni = bonferroni(t.wilcoxon.p_greater, 2);
  t.delta = {0.21, 0.16, 0.28};
  r.tests.push_back(t);
  r.notices.push_back("fixture");
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST(Report, MarkdownLayout) {
  const std::string md = render_markdown(fixture_report(true));
  EXPECT_NE(md.find("# comparison report"), std::string::npos);
  EXPECT_NE(md.find("| Method | PSNR ↑ | SSIM ↑ | GNS ↑ | NIQE ↓ |"), std::string::npos);
  // bfore has the best mean GNS (0.907), clahe the second best (0.813).
  EXPECT_NE(md.find("| bfore | **24.07** | **0.725** | **0.907** | n/a |"), std::string::npos) << md;
  EXPECT_NE(md.find("| clahe | <u>23.13</u> | <u>0.651</u> | <u>0.813</u> |"), std::string::npos) << md;
  EXPECT_NE(md.find("| bfore vs he | gns | 3 | 3/3 | 0 | 6.0 | 0.1250 | 0.2500 |"), std::string::npos) << md;
  EXPECT_NE(md.find("- fixture"), std::string::npos);
}

TEST(Report, CsvIsTidyLong) {
  const std::string csv = render_csv(fixture_report(true));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "image_id,method,metric,value");
  int n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
    ++n;
  }
  EXPECT_EQ(n, 9 * 7);
  EXPECT_NE(csv.find("a,bfore,gns,0.91\n"), std::string::npos);
}

TEST(Report, JsonCarriesManifestAndVersion) {
  const nlohmann::json j = render_json(fixture_report(true));
  EXPECT_EQ(j.at("report_version"), 1);
  EXPECT_EQ(j.at("library_version"), std::string(kLibraryVersion));
  EXPECT_EQ(j.at("dataset_hash"), "00000000deadbeef");
  EXPECT_EQ(j.at("seeds").at("master"), 7);
  EXPECT_EQ(j.at("manifest").at("entries").size(), 3u);
  EXPECT_EQ(j.at("rows").size(), 9u);
  const auto& t = j.at("tests").at(0);
  EXPECT_EQ(t.at("wins_a").get<int>() + t.at("wins_b").get<int>() + t.at("ties").get<int>(), t.at("n").get<int>());
  EXPECT_EQ(t.at("method"), "exact");
  EXPECT_EQ(t.at("zero_differences"), "dropped");
}

TEST(Report, UnpairedOmitsFullReferenceFields) {
  const ExperimentReport r = fixture_report(false);
  const std::string csv = render_csv(r);
  EXPECT_EQ(csv.find(",psnr,"), std::string::npos);
  EXPECT_EQ(csv.find(",ssim,"), std::string::npos);
  const nlohmann::json j = render_json(r);
  EXPECT_TRUE(j.at("rows").at(0).at("psnr").is_null());
  EXPECT_NE(render_markdown(r).find("| bfore | n/a | n/a |"), std::string::npos);
}

TEST(Report, HashPinnedFixture) {
  TempDir dir;
  const auto files = emit_report(fixture_report(true), dir.path());
  ASSERT_EQ(files.size(), 4u);
  EXPECT_EQ(hex64(fnv1a64(slurp(files.at("markdown")))), "bc4b62aad1737b70");
  EXPECT_EQ(hex64(fnv1a64(slurp(files.at("csv")))), "950c8c4bb437cae9");
  EXPECT_EQ(hex64(fnv1a64(slurp(files.at("json")))), "5aa5829fbdc4d9bf");
}

TEST(Experiments, MetricValueAndParamsJson) {
  const MetricRow row = fixture_row("x", "he", 0.5, false);
  EXPECT_EQ(metric_value(row, "gns"), 0.5);
  EXPECT_EQ(metric_value(row, "psnr"), std::nullopt);
  EXPECT_THROW(metric_value(row, "lpips"), ContractError);
  PipelineParams p;
  p.msrcr.sigma = {10, 60, 200};
  p.lagc_anlm.kernel_size = 5;
  EXPECT_EQ(params_from_json(params_to_json(p)), p);
  EXPECT_THROW(params_from_json(nlohmann::json::object()), DecodeError);
  nlohmann::json bad = params_to_json(p);
  bad["lagc_anlm"]["r"] = 9.0;
  EXPECT_THROW(params_from_json(bad), ContractError);
  const auto methods = default_comparison_methods();
  ASSERT_EQ(methods.size(), 8u);
  EXPECT_EQ(methods.front(), "bfore");
}

TEST(Experiments, ComparisonBookkeepingAndReplay) {
  TempDir dir;
  const PairedDataset ds = tiny_corpus(dir);
  ExperimentOptions opts;
  const ExperimentReport r = run_comparison(ds, {"he", "clahe"}, opts);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.rows.size(), 4u);
  ASSERT_EQ(r.tests.size(), 1u);
  EXPECT_EQ(r.tests[0].comparisons, 1);
  EXPECT_EQ(r.dataset_hash, dataset_hash(ds));
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.psnr.has_value());
    EXPECT_FALSE(row.niqe.has_value());
  }
  const ExperimentReport again = run_comparison(ds, {"he", "clahe"}, opts);
  EXPECT_EQ(render_json(r).dump(), render_json(again).dump());
  EXPECT_THROW(run_comparison(ds, {"he", "he"}, opts), ContractError);
  EXPECT_THROW(run_comparison(ds, {"gamma"}, opts), ContractError);
}

TEST(Experiments, WorkerCountDoesNotChangeReport) {
  TempDir dir;
  const PairedDataset ds = tiny_corpus(dir, 3);
  ExperimentOptions opts;
  opts.budget = {2, 1, 1};
  const ExperimentReport serial = run_comparison(ds, {"bfore", "msrcr_default"}, opts);
  opts.workers = 3;
  const ExperimentReport parallel = run_comparison(ds, {"bfore", "msrcr_default"}, opts);
  EXPECT_EQ(render_csv(serial), render_csv(parallel));
}

TEST(Experiments, UnpairedComparisonHasNoReferenceMetrics) {
  TempDir dir;
  const PairedDataset paired = tiny_corpus(dir);
  const PairedDataset ds = load_unpaired_dir(dir / "low");
  const ExperimentReport r = run_comparison(ds, {"he", "agcwd"}, ExperimentOptions{});
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_FALSE(row.psnr.has_value());
    EXPECT_FALSE(row.ssim.has_value());
  }
  EXPECT_NE(std::find(r.notices.begin(), r.notices.end(), "dataset is UNPAIRED: PSNR and SSIM are not reported"),
            r.notices.end());
}

TEST(Experiments, FailedImagesAreListed) {
  TempDir dir;
  PairedDataset ds = tiny_corpus(dir);
  std::ofstream(ds.entries[1].low, std::ios::binary | std::ios::trunc) << "not an image";
  const ExperimentReport r = run_comparison(ds, {"he"}, ExperimentOptions{});
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failed_ids, std::vector<std::string>{ds.entries[1].id});
  EXPECT_EQ(r.rows.size(), 1u);
}

TEST(Experiments, AblationParityAndFrozenDefaults) {
  TempDir dir;
  const PairedDataset ds = tiny_corpus(dir, 1);
  const ExperimentReport r = run_ablation(ds, 16, ExperimentOptions{});
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.evaluations, 16) << row.method;
    EXPECT_EQ(row.budget, 16);
  }
  EXPECT_EQ(r.rows[1].method, "boa_only");
  EXPECT_EQ(params_from_json(r.rows[1].params).lagc_anlm, LagcAnlmParams::defaults());
  EXPECT_EQ(params_from_json(r.rows[2].params).msrcr, MsrcrParams::defaults());
  EXPECT_EQ(r.tests.size(), 3u);
  EXPECT_NE(render_markdown(r).find("| Variant |"), std::string::npos);
}

TEST(Experiments, ScalabilityTableAndCorrelation) {
  TempDir dir;
  const PairedDataset ds = tiny_corpus(dir, 3);
  const ExperimentReport r = run_scalability(ds, {8, 16}, ExperimentOptions{});
  ASSERT_EQ(r.rows.size(), 12u);
  for (const auto& row : r.rows) EXPECT_EQ(row.evaluations, *row.budget) << row.method;
  ASSERT_EQ(r.tests.size(), 2u);
  EXPECT_EQ(r.tests[0].budget, 8);
  const std::string md = render_markdown(r);
  EXPECT_NE(md.find("| Budget | Evaluations | BFORE GNS | Random GNS | Δ | Wins | p |"), std::string::npos);
  EXPECT_NE(md.find("| 16 | 16 |"), std::string::npos);

  const ExperimentReport v = run_gns_validation(r);
  EXPECT_EQ(v.suite, "gns-validation");
  std::vector<double> g, p;
  for (const auto& row : r.rows) {
    g.push_back(row.gns);
    p.push_back(*row.psnr);
  }
  const auto it = std::find_if(v.correlations.begin(), v.correlations.end(),
                               [](const CorrelationRow& c) { return c.metric_b == "psnr"; });
  ASSERT_NE(it, v.correlations.end());
  EXPECT_DOUBLE_EQ(it->result.rho, spearman(g, p).rho);
  EXPECT_NE(render_markdown(v).find("| GNS vs psnr | 12 |"), std::string::npos);
}

TEST(Experiments, SingleConfigurationValidationNotice) {
  ExperimentReport pooled = fixture_report(true);
  pooled.rows.erase(std::remove_if(pooled.rows.begin(), pooled.rows.end(),
                                   [](const MetricRow& r) { return r.method != "he"; }),
                    pooled.rows.end());
  const ExperimentReport v = run_gns_validation(pooled);
  EXPECT_NE(std::find(v.notices.begin(), v.notices.end(), "insufficient variance: the pool holds a single configuration"),
            v.notices.end());
  EXPECT_EQ(v.correlations.size(), 2u);
}
