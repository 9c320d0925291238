#include "bfore/experiments.hpp"

#include "bfore/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bfore {

namespace {

std::string num(double v, int decimals) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string raw(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string pval(double p) {
  char buf[64];
  if (p < 1e-4)
    std::snprintf(buf, sizeof buf, "%.2e", p);
  else
    std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

nlohmann::json opt_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

std::vector<std::string> methods_in_order(const ExperimentReport& r) {
  std::vector<std::string> out;
  for (const auto& row : r.rows)
    if (std::find(out.begin(), out.end(), row.method) == out.end()) out.push_back(row.method);
  return out;
}

struct Column {
  std::string metric;
  std::string header;
  int decimals;
  bool higher_better;
  bool ranked;
};

// Bold for the best mean, underline for the second best.
std::vector<std::string> ranked_cells(const std::vector<double>& means, const Column& col) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < means.size(); ++i)
    if (!std::isnan(means[i])) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return col.higher_better ? means[a] > means[b] : means[a] < means[b];
  });
  std::vector<std::string> cells(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) cells[i] = num(means[i], col.decimals);
  if (col.ranked && order.size() >= 2) {
    cells[order[0]] = "**" + cells[order[0]] + "**";
    cells[order[1]] = "<u>" + cells[order[1]] + "</u>";
  }
  return cells;
}

void means_table(std::ostringstream& md, const ExperimentReport& r, const std::string& first_header) {
  const std::vector<Column> cols = {
      {"psnr", "PSNR ↑", 2, true, true},  {"ssim", "SSIM ↑", 3, true, true},   {"gns", "GNS ↑", 3, true, true},
      {"niqe", "NIQE ↓", 3, false, true}, {"entropy", "Entropy", 2, true, false}, {"ag", "AG", 2, true, false},
      {"sd", "SD", 2, true, false},       {"mean", "Mean", 2, true, false},
  };
  const auto methods = methods_in_order(r);
  std::vector<std::vector<std::string>> cells(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::vector<double> means;
    for (const auto& m : methods) means.push_back(r.mean_of(m, cols[c].metric));
    cells[c] = ranked_cells(means, cols[c]);
  }
  md << "| " << first_header;
  for (const auto& c : cols) md << " | " << c.header;
  md << " |\n|---";
  for (std::size_t c = 0; c < cols.size(); ++c) md << "|---:";
  md << "|\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    md << "| " << methods[m];
    for (std::size_t c = 0; c < cols.size(); ++c) md << " | " << cells[c][m];
    md << " |\n";
  }
  md << "\n";
}

void tests_table(std::ostringstream& md, const ExperimentReport& r) {
  if (r.tests.empty()) return;
  md << "| Comparison | Metric | n | Wins | Ties | W+ | p (one-sided) | p (Bonferroni) | Median Δ | 95% CI |\n"
     << "|---|---|---:|---:|---:|---:|---:|---:|---:|---|\n";
  for (const auto& t : r.tests) {
    const auto& w = t.wilcoxon;
    md << "| " << t.method_a << " vs " << t.method_b << " | " << t.metric << " | " << w.n_total << " | " << w.wins_a
       << "/" << w.n_total << " | " << w.ties << " | " << num(w.w_plus, 1) << " | " << pval(w.p_greater) << " | "
       << pval(t.p_bonferroni) << " | " << num(t.delta.median, 4) << " | [" << num(t.delta.lo, 4) << ", "
       << num(t.delta.hi, 4) << "] |\n";
  }
  md << "\nOne-sided alternative: the first method scores higher. Zero differences are dropped; "
     << (std::all_of(r.tests.begin(), r.tests.end(), [](const auto& t) { return t.wilcoxon.exact; })
             ? "all p-values use the exact null distribution."
             : "samples above 25 pairs use the normal approximation.")
     << " Confidence intervals are percentile-bootstrap intervals of the median difference.\n\n";
}

void scalability_table(std::ostringstream& md, const ExperimentReport& r) {
  md << "| Budget | Evaluations | BFORE GNS | Random GNS | Δ | Wins | p |\n"
     << "|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& t : r.tests) {
    if (!t.budget) continue;
    const long b = *t.budget;
    const double a = r.mean_of(t.method_a, "gns");
    const double c = r.mean_of(t.method_b, "gns");
    md << "| " << b << " | " << b << " | " << num(a, 3) << " | " << num(c, 3) << " | " << num(a - c, 3) << " | "
       << t.wilcoxon.wins_a << "/" << t.wilcoxon.n_total << " | " << pval(t.wilcoxon.p_greater) << " |\n";
  }
  md << "\n";
}

} // namespace

std::string render_markdown(const ExperimentReport& r) {
  std::ostringstream md;
  md << "# " << r.suite << " report\n\n";
  md << "- library: " << kLibraryVersion << "\n- dataset hash: `" << r.dataset_hash << "`\n- seed: " << r.seed
     << "\n- images: " << r.manifest.value("entries", nlohmann::json::array()).size() << "\n\n";

  if (r.suite == "scalability") {
    md << "## Scalability\n\n";
    scalability_table(md, r);
  }
  if (r.suite == "gns-validation") {
    md << "## GNS agreement\n\n| Pair | n | Spearman ρ | p |\n|---|---:|---:|---:|\n";
    for (const auto& c : r.correlations)
      md << "| GNS vs " << c.metric_b << " | " << c.result.n << " | " << num(c.result.rho, 3) << " | " << pval(c.result.p)
         << " |\n";
    md << "\n";
  } else {
    md << "## Mean metrics\n\n";
    means_table(md, r, r.suite == "ablation" ? "Variant" : "Method");
    md << "## Paired tests\n\n";
    tests_table(md, r);
  }
  if (!r.notices.empty()) {
    md << "## Notices\n\n";
    for (const auto& n : r.notices) md << "- " << n << "\n";
    md << "\n";
  }
  if (!r.failed_ids.empty()) {
    md << "## Failed images\n\n";
    for (const auto& id : r.failed_ids) md << "- " << id << "\n";
  }
  return md.str();
}

std::string render_csv(const ExperimentReport& r) {
  std::ostringstream csv;
  csv << "image_id,method,metric,value\n";
  static const char* metrics[] = {"psnr", "ssim", "gns", "niqe", "entropy", "ag", "sd", "mean"};
  for (const auto& row : r.rows) {
    for (const char* m : metrics)
      if (const auto v = metric_value(row, m)) csv << row.image_id << ',' << row.method << ',' << m << ',' << raw(*v) << '\n';
    if (row.evaluations > 0) csv << row.image_id << ',' << row.method << ",evaluations," << row.evaluations << '\n';
  }
  return csv.str();
}

nlohmann::json render_json(const ExperimentReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j{{"image_id", row.image_id}, {"method", row.method},   {"psnr", opt_json(row.psnr)},
                     {"ssim", opt_json(row.ssim)}, {"gns", row.gns},         {"niqe", opt_json(row.niqe)},
                     {"entropy", row.entropy},   {"ag", row.ag},           {"sd", row.sd},
                     {"mean", row.mean},         {"evaluations", row.evaluations}};
    if (row.budget) j["budget"] = *row.budget;
    if (!row.params.is_null()) j["params"] = row.params;
    rows.push_back(std::move(j));
  }
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.tests) {
    const auto& w = t.wilcoxon;
    nlohmann::json j{{"method_a", t.method_a},
                     {"method_b", t.method_b},
                     {"metric", t.metric},
                     {"n", w.n_total},
                     {"n_nonzero", w.n_used},
                     {"wins_a", w.wins_a},
                     {"wins_b", w.wins_b},
                     {"ties", w.ties},
                     {"statistic_w_plus", w.w_plus},
                     {"p_one_sided", w.p_greater},
                     {"p_two_sided", w.p_two_sided},
                     {"p_bonferroni", t.p_bonferroni},
                     {"comparisons", t.comparisons},
                     {"method", w.exact ? "exact" : "normal-approximation"},
                     {"zero_differences", "dropped"},
                     {"degenerate", w.degenerate},
                     {"median_delta", t.delta.median},
                     {"ci95", {t.delta.lo, t.delta.hi}},
                     {"ci_method", "percentile bootstrap, 10000 resamples"}};
    if (t.budget) j["budget"] = *t.budget;
    tests.push_back(std::move(j));
  }
  nlohmann::json corr = nlohmann::json::array();
  for (const auto& c : r.correlations)
    corr.push_back({{"metric_a", c.metric_a},
                    {"metric_b", c.metric_b},
                    {"n", c.result.n},
                    {"rho", c.result.rho},
                    {"p", c.result.p},
                    {"degenerate", c.result.degenerate}});
  return {{"report_version", kReportVersion},
          {"library_version", kLibraryVersion},
          {"suite", r.suite},
          {"dataset_hash", r.dataset_hash},
          {"manifest", r.manifest},
          {"seeds", {{"master", r.seed}}},
          {"config", r.config},
          {"rows", rows},
          {"tests", tests},
          {"correlations", corr},
          {"notices", r.notices},
          {"failed_ids", r.failed_ids}};
}

std::map<std::string, std::filesystem::path> emit_report(const ExperimentReport& report,
                                                         const std::filesystem::path& out_dir,
                                                         const std::vector<ReportFormat>& formats) {
  std::filesystem::create_directories(out_dir);
  std::map<std::string, std::filesystem::path> written;
  auto write = [&](const std::string& key, const std::string& name, const std::string& body) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << body;
    written[key] = path;
  };
  for (ReportFormat f : formats) {
    switch (f) {
      case ReportFormat::Markdown: write("markdown", "report.md", render_markdown(report)); break;
      case ReportFormat::Csv: write("csv", "report.csv", render_csv(report)); break;
      case ReportFormat::Json: write("json", "report.json", render_json(report).dump(2) + "\n"); break;
    }
  }
  std::ostringstream timing;
  timing << "image_id,method,wall_seconds\n";
  for (const auto& row : report.rows) timing << row.image_id << ',' << row.method << ',' << raw(row.wall_seconds) << '\n';
  write("timing", "timing.csv", timing.str());
  return written;
}

} // namespace bfore
