#include "bfore/experiments.hpp"

#include "bfore/baselines.hpp"
#include "bfore/errors.hpp"
#include "bfore/parallel.hpp"
#include "bfore/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace bfore {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct LoadedPair {
  ImageBuffer low;
  std::optional<ImageBuffer> ref;
};

LoadedPair load_entry(const DatasetEntry& e) {
  LoadedPair p{load_image(e.low), std::nullopt};
  if (e.ref) p.ref = load_image(*e.ref);
  return p;
}

ExperimentReport new_report(const std::string& suite, const PairedDataset& ds, const ExperimentOptions& options) {
  ExperimentReport r;
  r.suite = suite;
  r.manifest = ds.to_json();
  r.dataset_hash = dataset_hash(ds);
  r.seed = options.seed;
  r.config["budget"] = options.budget.to_json();
  nlohmann::json targets = nlohmann::json::array();
  for (int k = 0; k < GnsTargets::kTerms; ++k) {
    const auto& t = options.targets.terms[static_cast<std::size_t>(k)];
    targets.push_back({{"statistic", GnsTargets::term_name(k)}, {"mu0", t.mu0}, {"sigma0", t.sigma0}, {"weight", t.weight}});
  }
  r.config["gns_targets"] = targets;
  r.config["clahe"] = {{"clip_limit", 2.0}, {"tiles", {8, 8}}};
  r.config["agcwd"] = {{"alpha", 0.5}};
  r.config["boa"] = BoaConfig{}.to_json();
  r.config["fa"] = FaConfig{}.to_json();
  if (options.niqe_model)
    r.config["niqe_model"] = {{"corpus_size", options.niqe_model->corpus_size}, {"fit_seed", options.niqe_model->fit_seed}};
  else
    r.config["niqe_model"] = nullptr;
  if (!ds.has_references()) r.notices.push_back("dataset is UNPAIRED: PSNR and SSIM are not reported");
  if (!options.niqe_model) r.notices.push_back("no NIQE model supplied: NIQE is not reported");
  else
    r.notices.push_back("NIQE uses a locally fitted model; absolute values are not comparable to published tables");
  return r;
}

// Runs `job` for every entry; failures are recorded by id and do not stop the others.
template <typename Job>
void for_each_image(const PairedDataset& ds, int workers, ExperimentReport& report, Job job) {
  const std::size_t n = ds.entries.size();
  std::vector<std::vector<MetricRow>> per_image(n);
  std::vector<std::string> errors(n);
  parallel_for(n, workers, [&](std::size_t i) {
    try {
      per_image[i] = job(i, load_entry(ds.entries[i]));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      report.failed_ids.push_back(ds.entries[i].id);
      report.notices.push_back("image '" + ds.entries[i].id + "' failed: " + errors[i]);
      continue;
    }
    for (auto& row : per_image[i]) report.rows.push_back(std::move(row));
  }
}

void add_test(ExperimentReport& report, const std::string& a, const std::string& b, const std::string& metric,
              int comparisons, std::optional<long> budget) {
  std::map<std::string, double> va, vb;
  for (const auto& row : report.rows) {
    const auto v = metric_value(row, metric);
    if (!v) continue;
    if (row.method == a) va[row.image_id] = *v;
    if (row.method == b) vb[row.image_id] = *v;
  }
  std::vector<double> xa, xb, diffs;
  for (const auto& [id, v] : va) {
    const auto it = vb.find(id);
    if (it == vb.end()) continue;
    xa.push_back(v);
    xb.push_back(it->second);
    diffs.push_back(v - it->second);
  }
  PairedTestResult t;
  t.method_a = a;
  t.method_b = b;
  t.metric = metric;
  t.budget = budget;
  t.comparisons = comparisons;
  if (xa.empty()) {
    report.notices.push_back("no paired " + metric + " values for " + a + " vs " + b);
    return;
  }
  t.wilcoxon = wilcoxon_signed_rank(xa, xb);
  t.p_bonferroni = bonferroni(t.wilcoxon.p_greater, comparisons);
  t.delta = bootstrap_median_ci(diffs, derive_seed(report.seed, {0xC1ULL, report.tests.size()}));
  if (t.wilcoxon.degenerate) report.notices.push_back(a + " vs " + b + ": all differences are zero, p = 1");
  report.tests.push_back(std::move(t));
}

} // namespace

double ExperimentReport::mean_of(const std::string& method, const std::string& metric) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& row : rows) {
    if (row.method != method) continue;
    if (const auto v = metric_value(row, metric)) {
      sum += *v;
      ++n;
    }
  }
  return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

std::optional<double> metric_value(const MetricRow& row, const std::string& metric) {
  if (metric == "psnr") return row.psnr;
  if (metric == "ssim") return row.ssim;
  if (metric == "gns") return row.gns;
  if (metric == "niqe") return row.niqe;
  if (metric == "entropy") return row.entropy;
  if (metric == "ag") return row.ag;
  if (metric == "sd") return row.sd;
  if (metric == "mean") return row.mean;
  throw ContractError("unknown metric '" + metric + "'");
}

MetricRow measure(const std::string& image_id, const std::string& method, const ImageBuffer& output,
                  const ImageBuffer* reference, const NiqeModel* niqe_model, const GnsTargets& targets) {
  MetricRow row;
  row.image_id = image_id;
  row.method = method;
  const GnsScore score = gns(output, targets);
  row.gns = score.total;
  row.entropy = score.stats.entropy;
  row.ag = score.stats.average_gradient;
  row.sd = score.stats.std_dev;
  row.mean = score.stats.mean;
  if (reference) {
    row.psnr = psnr(output, *reference);
    row.ssim = ssim(output, *reference);
  }
  if (niqe_model) row.niqe = niqe(output, *niqe_model);
  return row;
}

std::vector<std::string> default_comparison_methods() {
  std::vector<std::string> m{"bfore"};
  for (BaselineId id : all_baselines()) m.emplace_back(to_string(id));
  return m;
}

ExperimentReport run_comparison(const PairedDataset& dataset, const std::vector<std::string>& methods,
                                const ExperimentOptions& options) {
  if (methods.empty()) throw ContractError("run_comparison: no methods");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (m != "bfore" && !baseline_from_string(m)) throw ContractError("run_comparison: unknown method '" + m + "'");
    if (!seen.insert(m).second) throw ContractError("run_comparison: duplicate method '" + m + "'");
  }
  ExperimentReport report = new_report("comparison", dataset, options);
  report.config["methods"] = methods;

  for_each_image(dataset, options.workers, report, [&](std::size_t i, const LoadedPair& pair) {
    std::vector<MetricRow> rows;
    const ImageBuffer* ref = pair.ref ? &*pair.ref : nullptr;
    for (const auto& m : methods) {
      const auto t0 = Clock::now();
      if (m == "bfore") {
        BforeOptions bo;
        bo.budget = options.budget;
        bo.seed = derive_seed(options.seed, {i});
        bo.targets = options.targets;
        const BforeResult res = bfore_optimize(pair.low, bo);
        const double wall = seconds_since(t0);
        MetricRow row = measure(dataset.entries[i].id, m, res.image, ref, options.niqe_model, options.targets);
        row.wall_seconds = wall;
        row.evaluations = res.evaluations();
        row.params = params_to_json(res.params);
        rows.push_back(std::move(row));
      } else {
        const ImageBuffer out = apply_baseline(*baseline_from_string(m), pair.low);
        const double wall = seconds_since(t0);
        MetricRow row = measure(dataset.entries[i].id, m, out, ref, options.niqe_model, options.targets);
        row.wall_seconds = wall;
        rows.push_back(std::move(row));
      }
    }
    return rows;
  });

  const int k = static_cast<int>(methods.size()) - 1;
  for (std::size_t m = 1; m < methods.size(); ++m) add_test(report, methods[0], methods[m], "gns", k, std::nullopt);
  return report;
}

ExperimentReport run_ablation(const PairedDataset& dataset, long budget, const ExperimentOptions& options) {
  ExperimentReport report = new_report("ablation", dataset, options);
  report.config["budget"] = budget_to_config(budget).to_json();
  report.config["evaluation_budget"] = budget;

  for_each_image(dataset, options.workers, report, [&](std::size_t i, const LoadedPair& pair) {
    std::vector<MetricRow> rows;
    const ImageBuffer* ref = pair.ref ? &*pair.ref : nullptr;
    const auto t0 = Clock::now();
    const auto variants = ablation_variants(pair.low, budget, derive_seed(options.seed, {i}), {}, options.targets);
    const double wall = seconds_since(t0) / static_cast<double>(variants.size());
    for (const auto& v : variants) {
      MetricRow row = measure(dataset.entries[i].id, std::string(to_string(v.variant)), v.image, ref,
                              options.niqe_model, options.targets);
      row.wall_seconds = wall;
      row.budget = budget;
      row.evaluations = v.evaluations;
      row.params = params_to_json(v.params);
      rows.push_back(std::move(row));
    }
    return rows;
  });

  for (const char* other : {"boa_only", "fa_only", "random"}) add_test(report, "full", other, "gns", 3, budget);
  return report;
}

ExperimentReport run_scalability(const PairedDataset& dataset, const std::vector<long>& budgets,
                                 const ExperimentOptions& options) {
  if (budgets.empty()) throw ContractError("run_scalability: no budgets");
  ExperimentReport report = new_report("scalability", dataset, options);
  report.config["budgets"] = budgets;
  nlohmann::json splits = nlohmann::json::array();
  for (long b : budgets) splits.push_back(budget_to_config(b).to_json());
  report.config["budget"] = splits;

  for_each_image(dataset, options.workers, report, [&](std::size_t i, const LoadedPair& pair) {
    std::vector<MetricRow> rows;
    const ImageBuffer* ref = pair.ref ? &*pair.ref : nullptr;
    const std::uint64_t seed = derive_seed(options.seed, {i});
    for (long b : budgets) {
      const std::string tag = "@" + std::to_string(b);
      auto t0 = Clock::now();
      BforeOptions bo;
      bo.budget = budget_to_config(b);
      bo.seed = seed;
      bo.targets = options.targets;
      const BforeResult res = bfore_optimize(pair.low, bo);
      MetricRow row = measure(dataset.entries[i].id, "bfore" + tag, res.image, ref, options.niqe_model, options.targets);
      row.wall_seconds = seconds_since(t0);
      row.budget = b;
      row.evaluations = res.evaluations();
      row.params = params_to_json(res.params);
      rows.push_back(std::move(row));

      t0 = Clock::now();
      const VariantResult rnd = random_variant(pair.low, b, seed, {}, options.targets);
      MetricRow rrow = measure(dataset.entries[i].id, "random" + tag, rnd.image, ref, options.niqe_model, options.targets);
      rrow.wall_seconds = seconds_since(t0);
      rrow.budget = b;
      rrow.evaluations = rnd.evaluations;
      rrow.params = params_to_json(rnd.params);
      rows.push_back(std::move(rrow));
    }
    return rows;
  });

  for (long b : budgets) {
    const std::string tag = "@" + std::to_string(b);
    add_test(report, "bfore" + tag, "random" + tag, "gns", 1, b);
  }
  return report;
}

ExperimentReport run_gns_validation(const ExperimentReport& pooled) {
  ExperimentReport report;
  report.suite = "gns-validation";
  report.dataset_hash = pooled.dataset_hash;
  report.manifest = pooled.manifest;
  report.seed = pooled.seed;
  report.config = pooled.config;
  report.config["pooled_suite"] = pooled.suite;
  report.rows = pooled.rows;
  report.failed_ids = pooled.failed_ids;

  std::set<std::string> configs;
  for (const auto& row : pooled.rows) configs.insert(row.method);
  if (configs.size() < 2) report.notices.push_back("insufficient variance: the pool holds a single configuration");

  for (const char* other : {"niqe", "ssim", "psnr"}) {
    std::vector<double> g, o;
    for (const auto& row : pooled.rows) {
      const auto v = metric_value(row, other);
      if (!v) continue;
      g.push_back(row.gns);
      o.push_back(*v);
    }
    if (g.size() < 3) {
      report.notices.push_back(std::string("insufficient data for GNS vs ") + other + " (" + std::to_string(g.size()) + " pairs)");
      continue;
    }
    CorrelationRow c{"gns", other, spearman(g, o)};
    if (c.result.degenerate) report.notices.push_back(std::string("insufficient variance for GNS vs ") + other);
    report.correlations.push_back(c);
  }
  return report;
}

// ---------------------------------------------------------------------------

nlohmann::json params_to_json(const PipelineParams& p) {
  const MsrcrParams& m = p.msrcr;
  const LagcAnlmParams& l = p.lagc_anlm;
  return {{"msrcr",
           {{"sigma", m.sigma}, {"weight", m.weight}, {"mu", m.mu}, {"eta", m.eta}, {"alpha_blend", m.alpha_blend}}},
          {"lagc_anlm",
           {{"gamma0", l.gamma0},
            {"kernel_size", l.kernel_size},
            {"sigma_min", l.sigma_min},
            {"h", l.h},
            {"block_size", l.block_size},
            {"sat_scale", l.sat_scale},
            {"r", l.r}}}};
}

PipelineParams params_from_json(const nlohmann::json& j) {
  PipelineParams p;
  try {
    const auto& m = j.at("msrcr");
    p.msrcr.sigma = m.at("sigma").get<std::array<double, 3>>();
    p.msrcr.weight = m.at("weight").get<std::array<double, 3>>();
    p.msrcr.mu = m.at("mu").get<double>();
    p.msrcr.eta = m.at("eta").get<double>();
    p.msrcr.alpha_blend = m.at("alpha_blend").get<double>();
    const auto& l = j.at("lagc_anlm");
    p.lagc_anlm.gamma0 = l.at("gamma0").get<double>();
    p.lagc_anlm.kernel_size = l.at("kernel_size").get<int>();
    p.lagc_anlm.sigma_min = l.at("sigma_min").get<double>();
    p.lagc_anlm.h = l.at("h").get<double>();
    p.lagc_anlm.block_size = l.at("block_size").get<int>();
    p.lagc_anlm.sat_scale = l.at("sat_scale").get<double>();
    p.lagc_anlm.r = l.at("r").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed parameter file: ") + e.what());
  }
  p.validate();
  return p;
}

} // namespace bfore
