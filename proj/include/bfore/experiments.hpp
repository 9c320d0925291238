#pragma once

#include "bfore/bfore.hpp"
#include "bfore/data.hpp"
#include "bfore/niqe.hpp"
#include "bfore/stats.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bfore {

inline constexpr std::string_view kLibraryVersion = "bfore 0.1.0";
inline constexpr int kReportVersion = 1;

/// Metrics of one method on one image. Full-reference fields are empty for unpaired data.
struct MetricRow {
  std::string image_id;
  std::string method;
  std::optional<double> psnr;
  std::optional<double> ssim;
  double gns = 0.0;
  std::optional<double> niqe;
  double entropy = 0.0;
  double ag = 0.0;
  double sd = 0.0;
  double mean = 0.0;
  double wall_seconds = 0.0;
  std::optional<long> budget;
  long evaluations = 0;
  nlohmann::json params;
};

/// Paired comparison of method_a against method_b on one metric (alternative: a greater).
struct PairedTestResult {
  std::string method_a;
  std::string method_b;
  std::string metric;
  std::optional<long> budget;
  WilcoxonResult wilcoxon;
  int comparisons = 1;
  double p_bonferroni = 1.0;
  MedianCi delta;
};

struct CorrelationRow {
  std::string metric_a;
  std::string metric_b;
  SpearmanResult result;
};

struct ExperimentReport {
  std::string suite;
  std::string dataset_hash;
  nlohmann::json manifest;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<MetricRow> rows;
  std::vector<PairedTestResult> tests;
  std::vector<CorrelationRow> correlations;
  std::vector<std::string> notices;
  std::vector<std::string> failed_ids;

  bool ok() const noexcept { return failed_ids.empty(); }
  /// Mean of `metric` over rows of `method`; NaN if none carry it.
  double mean_of(const std::string& method, const std::string& metric) const;
};

struct ExperimentOptions {
  BudgetConfig budget = BudgetConfig::light();
  std::uint64_t seed = 42;
  /// Images processed concurrently.
  int workers = 1;
  const NiqeModel* niqe_model = nullptr;
  GnsTargets targets;
};

/// Value of a named metric ("psnr", "ssim", "gns", "niqe", "entropy", "ag", "sd", "mean").
std::optional<double> metric_value(const MetricRow& row, const std::string& metric);

/// Scores `output` against an optional reference.
MetricRow measure(const std::string& image_id, const std::string& method, const ImageBuffer& output,
                  const ImageBuffer* reference, const NiqeModel* niqe_model, const GnsTargets& targets = {});

/// Method names: "bfore" or any baseline name.
std::vector<std::string> default_comparison_methods();

/// Every method on every image, then the first method against each other one on GNS
/// (Bonferroni over the number of comparisons).
ExperimentReport run_comparison(const PairedDataset& dataset, const std::vector<std::string>& methods,
                                const ExperimentOptions& options);

/// The four variants at exact budget parity; full against each other variant.
ExperimentReport run_ablation(const PairedDataset& dataset, long budget, const ExperimentOptions& options);

/// BFORE and random search at each budget with shared seeds; one-sided test per budget.
ExperimentReport run_scalability(const PairedDataset& dataset, const std::vector<long>& budgets,
                                 const ExperimentOptions& options);

/// Spearman correlations of GNS against NIQE, SSIM and PSNR over the pooled rows.
ExperimentReport run_gns_validation(const ExperimentReport& pooled);

enum class ReportFormat { Markdown, Csv, Json };

/// Writes report.md / report.csv / report.json (plus timing.csv) and returns the written paths by format name.
std::map<std::string, std::filesystem::path> emit_report(const ExperimentReport& report,
                                                         const std::filesystem::path& out_dir,
                                                         const std::vector<ReportFormat>& formats = {
                                                             ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json});

std::string render_markdown(const ExperimentReport& report);
std::string render_csv(const ExperimentReport& report);
nlohmann::json render_json(const ExperimentReport& report);

/// Parameter vectors as named JSON fields.
nlohmann::json params_to_json(const PipelineParams& p);
PipelineParams params_from_json(const nlohmann::json& j);

} // namespace bfore
