#include "bfore/baselines.hpp"
#include "bfore/bfore.hpp"
#include "bfore/data.hpp"
#include "bfore/errors.hpp"
#include "bfore/experiments.hpp"
#include "bfore/niqe.hpp"
#include "bfore/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace bfore;

namespace {

constexpr int kExitGate = 1;
constexpr int kExitError = 2;

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

struct EnhanceArgs {
  fs::path input;
  fs::path output;
  std::string preset = "light";
  std::uint64_t seed = 42;
  fs::path trace;
  fs::path params_out;
  fs::path params_in;
  int workers = 1;
};

int cmd_enhance(const EnhanceArgs& a) {
  const ImageBuffer img = load_image(a.input);
  ImageBuffer out;
  PipelineParams params;
  if (!a.params_in.empty()) {
    params = params_from_json(read_json(a.params_in));
    out = run_pipeline(img, params);
  } else if (a.preset == "default") {
    params = PipelineParams::defaults();
    out = bfore_default(img);
  } else {
    BforeOptions opts;
    opts.budget = budget_preset(a.preset);
    opts.seed = a.seed;
    opts.eval.workers = a.workers;
    const BforeResult res = bfore_optimize(img, opts);
    out = res.image;
    params = res.params;
    std::cout << "GNS " << res.score.total << " after " << res.evaluations() << " evaluations\n";
    if (!a.trace.empty())
      write_json({{"phase1_boa", res.boa.to_json()}, {"phase2_fa", res.fa.to_json()}, {"budget", opts.budget.to_json()}},
                 a.trace);
  }
  save_image(out, a.output);
  if (!a.params_out.empty()) write_json(params_to_json(params), a.params_out);
  std::cout << "wrote " << a.output.string() << "\n";
  return 0;
}

int cmd_gen_synthetic(const SyntheticSpec& spec, const fs::path& out, int workers) {
  const GeneratedDataset g = generate_synthetic(spec, out, workers);
  std::cout << "generated " << g.dataset.size() << " pairs in " << out.string() << "\n"
            << "manifest hash " << dataset_hash(g.dataset) << "\n"
            << "reference entropy > 6 bits: " << g.qa.entropy_above_6 << "/" << spec.count << "\n";
  int rc = 0;
  if (!g.qa.gns_violations.empty()) {
    std::cerr << "QA failure: GNS(reference) <= GNS(low) for";
    for (const auto& id : g.qa.gns_violations) std::cerr << ' ' << id;
    std::cerr << "\n";
    rc = kExitGate;
  }
  if (g.qa.entropy_above_6 * 30 < spec.count * 28) {
    std::cerr << "QA failure: fewer than 28/30 of references exceed 6 bits of entropy\n";
    rc = kExitGate;
  }
  return rc;
}

int cmd_fit_niqe(const fs::path& corpus, const fs::path& out, std::uint64_t seed, int max_patches) {
  const NiqeModel m = fit_niqe_model(corpus, seed, max_patches);
  m.save(out);
  std::cout << "fitted NIQE model on " << m.corpus_size << " images -> " << out.string() << "\n"
            << "note: scores from a locally fitted model rank images but are not comparable to published values\n";
  return 0;
}

struct BenchArgs {
  fs::path dataset;
  std::string suite = "comparison";
  std::string preset = "light";
  std::uint64_t seed = 42;
  fs::path out = "bench_out";
  std::vector<long> budgets{50, 128, 300};
  long ablation_budget = 60;
  fs::path niqe_model;
  int workers = 1;
  std::vector<std::string> methods;
};

int cmd_benchmark(const BenchArgs& a) {
  const PairedDataset ds = load_manifest(a.dataset);
  std::optional<NiqeModel> model;
  if (!a.niqe_model.empty()) {
    model = NiqeModel::load(a.niqe_model);
    std::cout << "note: NIQE uses a locally fitted model; only rankings and correlations are meaningful\n";
  }
  ExperimentOptions opts;
  opts.budget = budget_preset(a.preset);
  opts.seed = a.seed;
  opts.workers = a.workers;
  opts.niqe_model = model ? &*model : nullptr;

  ExperimentReport report;
  if (a.suite == "comparison") {
    report = run_comparison(ds, a.methods.empty() ? default_comparison_methods() : a.methods, opts);
  } else if (a.suite == "ablation") {
    report = run_ablation(ds, a.ablation_budget, opts);
  } else if (a.suite == "scalability") {
    report = run_scalability(ds, a.budgets, opts);
  } else if (a.suite == "gns-validation") {
    if (!model) throw ContractError("gns-validation needs --niqe-model");
    report = run_gns_validation(run_scalability(ds, a.budgets, opts));
  } else {
    throw ContractError("unknown suite '" + a.suite + "'");
  }

  const auto files = emit_report(report, a.out);
  for (const auto& [fmt, path] : files)
    if (fmt != "timing") std::cout << fmt << " " << path.string() << " " << hex64(file_hash(path)) << "\n";
  if (!report.ok()) {
    std::cerr << "failed images:";
    for (const auto& id : report.failed_ids) std::cerr << ' ' << id;
    std::cerr << "\n";
    return kExitGate;
  }
  return 0;
}

int cmd_index(const fs::path& low, const fs::path& high, const fs::path& unpaired, std::size_t take_first,
              const fs::path& out) {
  LoadReport rep;
  PairedDataset ds;
  if (!unpaired.empty()) {
    ds = load_unpaired_dir(unpaired, &rep);
  } else {
    if (low.empty() || high.empty()) throw ContractError("index needs --low and --high, or --unpaired");
    ds = load_paired_dir(low, high, take_first, &rep);
  }
  save_manifest(ds, out);
  std::cout << "indexed " << ds.size() << " entries (" << to_string(ds.origin) << "); unmatched low " << rep.unmatched_low
            << ", unmatched high " << rep.unmatched_high << ", rejected " << rep.rejected_dimensions << "\n";
  for (const auto& n : rep.notices) std::cout << "notice: " << n << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-light image enhancement with a two-phase BOA/FA-tuned Retinex pipeline"};
  app.require_subcommand(1);

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "Enhance one image");
  enhance->add_option("input", ea.input, "Input PNG or BMP")->required()->check(CLI::ExistingFile);
  enhance->add_option("-o,--output", ea.output, "Output image")->required();
  enhance->add_option("--preset", ea.preset, "Optimizer budget")->check(CLI::IsMember({"full", "light", "default"}));
  enhance->add_option("--seed", ea.seed, "Master seed");
  enhance->add_option("--dump-trace", ea.trace, "Write the optimisation trace as JSON");
  enhance->add_option("--params-out", ea.params_out, "Write the winning parameters as JSON");
  enhance->add_option("--params-in", ea.params_in, "Replay parameters without optimisation")->check(CLI::ExistingFile);
  enhance->add_option("--workers", ea.workers, "Parallel fitness evaluations")->check(CLI::PositiveNumber);

  SyntheticSpec spec;
  fs::path gen_out = "synthetic";
  int gen_workers = default_workers();
  auto* gen = app.add_subcommand("gen-synthetic", "Generate the seeded synthetic paired corpus");
  gen->add_option("--count", spec.count, "Number of pairs");
  gen->add_option("--seed", spec.seed, "Master seed");
  gen->add_option("--width", spec.width, "Image width");
  gen->add_option("--height", spec.height, "Image height");
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--workers", gen_workers, "Parallel image jobs")->check(CLI::PositiveNumber);

  fs::path niqe_corpus, niqe_out = "niqe_model.json";
  std::uint64_t niqe_seed = 0;
  int niqe_max = 20000;
  auto* fit = app.add_subcommand("fit-niqe", "Fit a NIQE model on a pristine image directory");
  fit->add_option("--corpus", niqe_corpus, "Directory of pristine images")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--out", niqe_out, "Model JSON");
  fit->add_option("--seed", niqe_seed, "Patch subsampling seed");
  fit->add_option("--max-patches", niqe_max, "Patch cap");

  BenchArgs ba;
  ba.workers = default_workers();
  auto* bench = app.add_subcommand("benchmark", "Run an experiment suite");
  bench->add_option("--dataset", ba.dataset, "Dataset manifest")->required()->check(CLI::ExistingFile);
  bench->add_option("--suite", ba.suite, "Suite")
      ->check(CLI::IsMember({"comparison", "ablation", "scalability", "gns-validation"}));
  bench->add_option("--preset", ba.preset, "Optimizer budget for comparison")->check(CLI::IsMember({"full", "light"}));
  bench->add_option("--seed", ba.seed, "Master seed");
  bench->add_option("--out", ba.out, "Report directory");
  bench->add_option("--budgets", ba.budgets, "Evaluation budgets for scalability")->delimiter(',');
  bench->add_option("--budget", ba.ablation_budget, "Evaluation budget for ablation");
  bench->add_option("--niqe-model", ba.niqe_model, "NIQE model JSON")->check(CLI::ExistingFile);
  bench->add_option("--workers", ba.workers, "Parallel image jobs")->check(CLI::PositiveNumber);
  bench->add_option("--methods", ba.methods, "Comparison methods, first is tested against the rest")->delimiter(',');

  fs::path idx_low, idx_high, idx_unpaired, idx_out = "manifest.json";
  std::size_t idx_take = 0;
  auto* index = app.add_subcommand("index", "Build a manifest from LOL-style or unpaired directories");
  index->add_option("--low", idx_low, "Low-light directory")->check(CLI::ExistingDirectory);
  index->add_option("--high", idx_high, "Reference directory")->check(CLI::ExistingDirectory);
  index->add_option("--unpaired", idx_unpaired, "Directory without references")->check(CLI::ExistingDirectory);
  index->add_option("--take-first", idx_take, "Keep the first N sorted pairs");
  index->add_option("--out", idx_out, "Manifest path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*enhance) return cmd_enhance(ea);
    if (*gen) return cmd_gen_synthetic(spec, gen_out, gen_workers);
    if (*fit) return cmd_fit_niqe(niqe_corpus, niqe_out, niqe_seed, niqe_max);
    if (*bench) return cmd_benchmark(ba);
    if (*index) return cmd_index(idx_low, idx_high, idx_unpaired, idx_take, idx_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
