#include "bfore/baselines.hpp"
#include "bfore/bfore.hpp"
#include "bfore/data.hpp"
#include "bfore/experiments.hpp"
#include "bfore/niqe.hpp"
#include "bfore/optimizers.hpp"
#include "bfore/pipeline.hpp"
#include "bfore/parallel.hpp"
#include "bfore/quality.hpp"
#include "bfore/stats.hpp"
#include "oracles.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace bfore;
using namespace bfore::oracle;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Plane random_plane(int rows, int cols, Rng& rng) {
  Plane p(rows, cols);
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.uniform();
  return p;
}

ImageBuffer random_image(int w, int h, Rng& rng) {
  return ImageBuffer::rgb(random_plane(h, w, rng), random_plane(h, w, rng), random_plane(h, w, rng));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int w = 8 + static_cast<int>(rng.index(25)), h = 8 + static_cast<int>(rng.index(25));
    const ImageBuffer a = random_image(w, h, rng), b = random_image(w, h, rng);
    const Plane g = a.value();
    worst = std::max(worst, std::abs(entropy(g) - entropy_oracle(g)));
    worst = std::max(worst, std::abs(average_gradient(g) - ag_oracle(g)));
    worst = std::max(worst, std::abs(std_dev(g) - sd_oracle(g)));
    worst = std::max(worst, std::abs(psnr(a, b) - psnr_oracle(a, b)));
    worst = std::max(worst, std::abs(ssim(a, b) - ssim_oracle(a.luma(), b.luma())));
    const int m = 3 + 2 * static_cast<int>(rng.index(7));
    const LocalStats fast = local_stats(g, m), ref = local_stats_oracle(g, m);
    worst = std::max(worst, (fast.mean - ref.mean).abs().maxCoeff());
    worst = std::max(worst, (fast.stddev - ref.stddev).abs().maxCoeff());
    const int block = 5 + 2 * static_cast<int>(rng.index(4));
    const double hh = rng.uniform(5.0, 15.0);
    worst = std::max(worst, (anlm(g, hh, block) - anlm_oracle(g, hh, block, kAnlmSearchWindow)).abs().maxCoeff());
  }
  const double secs = elapsed(t0);
  return {worst <= 1e-6 && secs < 60.0, "max |error| " + fmt("%.2e", worst) + " over 20 images, " + fmt("%.1f s", secs)};
}

Outcome gns_kernel() {
  const GnsTargets t;
  ImageStatistics s;
  s.entropy = t.terms[0].mu0;
  s.average_gradient = t.terms[1].mu0;
  s.std_dev = t.terms[2].mu0;
  s.mean = t.terms[3].mu0;
  s.mscn_alpha = t.terms[4].mu0;
  s.clipping_ratio = t.terms[5].mu0;
  double worst = std::abs(gns_from_statistics(s, t).total - 1.0);
  for (int k = 0; k < GnsTargets::kTerms; ++k) {
    ImageStatistics d = s;
    double* fields[] = {&d.entropy, &d.average_gradient, &d.std_dev, &d.mean, &d.mscn_alpha, &d.clipping_ratio};
    for (double sign : {-1.0, 1.0}) {
      *fields[k] = t.terms[static_cast<std::size_t>(k)].mu0 + sign * t.terms[static_cast<std::size_t>(k)].sigma0;
      const double want = 1.0 - t.terms[static_cast<std::size_t>(k)].weight * (1.0 - std::exp(-0.5));
      worst = std::max(worst, std::abs(gns_from_statistics(d, t).total - want));
    }
  }
  return {worst <= 1e-9, "max |error| " + fmt("%.2e", worst) + " over centre and 12 displacements"};
}

Outcome mscn_sanity() {
  double g_lo = 1e9, g_hi = -1e9, l_lo = 1e9, l_hi = -1e9;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(303, {seed}));
    std::vector<double> gauss(65536), lap(65536);
    for (auto& v : gauss) v = rng.normal();
    for (auto& v : lap) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * -std::log(u);
    }
    const double ag = ggd_shape(gauss).alpha, al = ggd_shape(lap).alpha;
    g_lo = std::min(g_lo, ag);
    g_hi = std::max(g_hi, ag);
    l_lo = std::min(l_lo, al);
    l_hi = std::max(l_hi, al);
  }
  const bool ok = g_lo >= 1.7 && g_hi <= 2.3 && l_lo >= 0.8 && l_hi <= 1.2;
  return {ok, "Gaussian alpha in [" + fmt("%.3f", g_lo) + ", " + fmt("%.3f", g_hi) + "], Laplace alpha in [" +
                  fmt("%.3f", l_lo) + ", " + fmt("%.3f", l_hi) + "] over 20 seeds"};
}

Outcome optimizer_invariants() {
  int bound_violations = 0, non_monotone = 0, repro_mismatch = 0;
  for (int run = 0; run < 100; ++run) {
    Rng rng(derive_seed(404, {static_cast<std::uint64_t>(run)}));
    const int dim = 1 + static_cast<int>(rng.index(6));
    Eigen::VectorXd lo(dim), hi(dim), centre(dim);
    for (int d = 0; d < dim; ++d) {
      lo[d] = rng.uniform(-10.0, 0.0);
      hi[d] = lo[d] + rng.uniform(0.1, 10.0);
      centre[d] = rng.uniform(lo[d], hi[d]);
    }
    const SearchSpace space(lo, hi);
    const FitnessFn f = [&centre](const Eigen::VectorXd& x) { return -(x - centre).squaredNorm(); };
    EvalOptions ev;
    ev.on_candidate = [&](int, int, const Eigen::VectorXd& x) {
      if (((x.array() < lo.array()) || (x.array() > hi.array())).any()) ++bound_violations;
    };
    BoaConfig bc;
    bc.population = 2 + static_cast<int>(rng.index(8));
    bc.iterations = static_cast<int>(rng.index(10));
    bc.seed = rng.engine()();
    FaConfig fc;
    fc.population = 2 + static_cast<int>(rng.index(8));
    fc.iterations = static_cast<int>(rng.index(10));
    fc.seed = rng.engine()();
    const OptRun runs[] = {boa_optimize(f, space, bc, ev), fa_optimize(f, space, fc, ev),
                           random_search(f, space, 1 + static_cast<long>(rng.index(60)), bc.seed, ev)};
    for (const OptRun& r : runs)
      for (std::size_t i = 1; i < r.trace.size(); ++i)
        if (r.trace[i].best_fitness < r.trace[i - 1].best_fitness) ++non_monotone;

    if (run % 10 == 0) {
      std::vector<nlohmann::json> boa_dumps, fa_dumps;
      for (int workers : {1, 4, 8}) {
        EvalOptions par;
        par.workers = workers;
        OptRun b = boa_optimize(f, space, bc, par), a = fa_optimize(f, space, fc, par);
        b.wall_seconds = a.wall_seconds = 0.0;
        boa_dumps.push_back(b.to_json());
        fa_dumps.push_back(a.to_json());
      }
      for (std::size_t k = 1; k < 3; ++k)
        if (boa_dumps[k] != boa_dumps[0] || fa_dumps[k] != fa_dumps[0]) ++repro_mismatch;
    }
  }

  Rng img_rng(405);
  ImageBuffer img = random_image(32, 24, img_rng);
  std::set<long> spent;
  for (const auto& v : ablation_variants(img, 50, 9)) spent.insert(v.evaluations);
  const bool parity = spent == std::set<long>{50};

  const bool ok = bound_violations == 0 && non_monotone == 0 && repro_mismatch == 0 && parity;
  std::ostringstream s;
  s << "100 fuzz runs: " << bound_violations << " bound violations, " << non_monotone
    << " trace decreases; workers 1/4/8 mismatches " << repro_mismatch << "; ablation budgets "
    << (parity ? "all 50" : "unequal");
  return {ok, s.str()};
}

struct DeskRun {
  std::vector<double> bfore, bfore_default, msrcr, he;
  double seconds = 0.0;
};

DeskRun desk_comparison() {
  SyntheticSpec spec;
  spec.count = 10;
  spec.width = 300;
  spec.height = 200;
  DeskRun r;
  r.bfore.resize(10);
  r.bfore_default.resize(10);
  r.msrcr.resize(10);
  r.he.resize(10);
  const auto t0 = Clock::now();
  parallel_for(10, default_workers(), [&](std::size_t i) {
    const ImageBuffer low = synthesize_pair(spec, static_cast<int>(i)).low;
    BforeOptions o;
    o.budget = BudgetConfig::light();
    o.seed = derive_seed(42, {i});
    r.bfore[i] = bfore_optimize(low, o).score.total;
    r.bfore_default[i] = gns(bfore_default(low)).total;
    r.msrcr[i] = gns(msrcr_default(low)).total;
    r.he[i] = gns(he(low)).total;
  });
  r.seconds = elapsed(t0);
  return r;
}

Outcome paper_direction(const DeskRun& r) {
  const double mb = mean(r.bfore), md = mean(r.bfore_default), mm = mean(r.msrcr), mh = mean(r.he);
  const WilcoxonResult w = wilcoxon_signed_rank(r.bfore, r.msrcr);
  const bool ordering = mb > md && md > mm && mm > mh;
  const bool ok = ordering && w.wins_a >= 8 && w.p_greater < 0.05 && r.seconds < 1200.0;
  std::ostringstream s;
  s << "mean GNS bfore " << fmt("%.4f", mb) << " > default " << fmt("%.4f", md) << " > msrcr " << fmt("%.4f", mm)
    << " > he " << fmt("%.4f", mh) << (ordering ? "" : " (ordering violated)") << "; wins vs msrcr " << w.wins_a
    << "/10, p " << fmt("%.2e", w.p_greater) << "; " << fmt("%.0f s", r.seconds);
  return {ok, s.str()};
}

Outcome default_dominance(const DeskRun& r) {
  double worst = std::numeric_limits<double>::infinity();
  int violations = 0;
  for (std::size_t i = 0; i < r.bfore.size(); ++i) {
    worst = std::min(worst, r.bfore[i] - r.bfore_default[i]);
    if (r.bfore[i] < r.bfore_default[i] - 1e-12) ++violations;
  }
  return {violations == 0, std::to_string(violations) + "/10 violations, min margin " + fmt("%.3e", worst)};
}

struct ScalabilityRun {
  std::vector<double> bfore50, bfore128, random50, random128;
  std::vector<double> pooled_gns, pooled_niqe;
};

ScalabilityRun scalability_run() {
  SyntheticSpec spec;
  spec.count = 10;
  spec.width = 150;
  spec.height = 100;
  SyntheticSpec pristine = spec;
  pristine.count = 30;
  pristine.seed = 777;
  std::vector<ImageBuffer> corpus;
  for (int i = 0; i < pristine.count; ++i) corpus.push_back(synthesize_pair(pristine, i).reference);
  const NiqeModel model = fit_niqe_model(corpus, 777);

  ScalabilityRun r;
  for (auto* v : {&r.bfore50, &r.bfore128, &r.random50, &r.random128}) v->resize(10);
  std::vector<std::array<ImageBuffer, 4>> outputs(10);
  parallel_for(10, default_workers(), [&](std::size_t i) {
    const ImageBuffer low = synthesize_pair(spec, static_cast<int>(i)).low;
    const std::uint64_t seed = derive_seed(42, {i});
    int k = 0;
    for (long budget : {50L, 128L}) {
      BforeOptions o;
      o.budget = budget_to_config(budget);
      o.seed = seed;
      const BforeResult b = bfore_optimize(low, o);
      const VariantResult rnd = random_variant(low, budget, seed);
      (budget == 50 ? r.bfore50 : r.bfore128)[i] = b.score.total;
      (budget == 50 ? r.random50 : r.random128)[i] = rnd.score.total;
      outputs[i][static_cast<std::size_t>(k++)] = b.image;
      outputs[i][static_cast<std::size_t>(k++)] = rnd.image;
    }
  });
  for (const auto& per_image : outputs)
    for (const ImageBuffer& img : per_image) {
      r.pooled_gns.push_back(gns(img).total);
      r.pooled_niqe.push_back(niqe(img, model));
    }
  return r;
}

int wins(const std::vector<double>& a, const std::vector<double>& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] > b[i];
  return n;
}

Outcome scalability_direction(const ScalabilityRun& r) {
  const double m50 = mean(r.bfore50), m128 = mean(r.bfore128);
  const int w50 = wins(r.bfore50, r.random50), w128 = wins(r.bfore128, r.random128);
  std::ostringstream s;
  s << "mean GNS " << fmt("%.4f", m50) << " @50 -> " << fmt("%.4f", m128) << " @128; wins vs random " << w50
    << "/10 -> " << w128 << "/10 (random mean " << fmt("%.4f", mean(r.random50)) << " -> "
    << fmt("%.4f", mean(r.random128)) << ")";
  return {m128 >= m50 && w128 >= w50, s.str()};
}

Outcome gns_niqe_agreement(const ScalabilityRun& r) {
  const SpearmanResult sp = spearman(r.pooled_gns, r.pooled_niqe);
  const double oracle_rho = spearman_oracle(r.pooled_gns, r.pooled_niqe);
  const bool cross_check = std::abs(sp.rho - oracle_rho) < 1e-12;
  std::ostringstream s;
  s << "rho " << fmt("%+.3f", sp.rho) << " (p " << fmt("%.2e", sp.p) << ", n " << sp.n << "), oracle "
    << (cross_check ? "agrees" : "disagrees");
  return {sp.rho < 0.0 && cross_check, s.str()};
}

Outcome wilcoxon_enumeration() {
  Rng rng(909);
  int checked = 0;
  double worst = 0.0;
  while (checked < 50) {
    const int n = 1 + static_cast<int>(rng.index(12));
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = std::round(rng.uniform(0.0, 3.0) * 20) / 20;
      b[static_cast<std::size_t>(i)] = std::round(rng.uniform(0.0, 3.0) * 20) / 20;
    }
    const WilcoxonResult w = wilcoxon_signed_rank(a, b);
    if (w.degenerate) continue;
    const EnumeratedP e = enumerate_wilcoxon(a, b);
    worst = std::max({worst, std::abs(w.p_greater - e.greater), std::abs(w.p_less - e.less)});
    if (!w.exact) worst = 1.0;
    ++checked;
  }
  return {worst <= 1e-12, "50 samples, max |p - enumeration| " + fmt("%.2e", worst)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_smoke() {
  const auto t0 = Clock::now();
  const fs::path work = fs::temp_directory_path() / ("bfore_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  SyntheticSpec spec;
  spec.count = 2;
  spec.width = 64;
  spec.height = 48;
  generate_synthetic(spec, work / "fixture");
  std::vector<std::string> hashes[2];
  bool files_ok = true;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = work / ("run" + std::to_string(run));
    const std::string cmd = std::string("\"") + BFORE_CLI_PATH + "\" benchmark --dataset \"" +
                            (work / "fixture" / "manifest.json").string() +
                            "\" --suite comparison --preset light --seed 7 --out \"" + out.string() + "\" > \"" +
                            (work / ("log" + std::to_string(run))).string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) files_ok = false;
    for (const char* name : {"report.md", "report.csv", "report.json"}) {
      if (!fs::exists(out / name)) {
        files_ok = false;
        continue;
      }
      hashes[run].push_back(hex64(fnv1a64(read_file(out / name))));
    }
  }
  fs::remove_all(work);
  const double secs = elapsed(t0);
  const bool stable = files_ok && hashes[0] == hashes[1] && hashes[0].size() == 3;
  std::ostringstream s;
  s << (files_ok ? "md/csv/json emitted" : "missing output or nonzero exit") << ", hashes "
    << (stable ? "stable" : "differ");
  if (!hashes[0].empty()) s << " (json " << hashes[0].back() << ")";
  s << ", " << fmt("%.1f s", secs);
  return {stable && secs < 180.0, s.str()};
}

} // namespace

int main(int argc, char** argv) {
  // --known-failure N: criterion N still prints FAIL but does not change the exit code.
  // --only N: run only the listed criteria.
  std::set<int> known, only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--known-failure" || arg == "--only") && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) (arg == "--only" ? only : known).insert(std::stoi(item));
    } else {
      std::cerr << "usage: acceptance [--only N[,N...]] [--known-failure N[,N...]]\n";
      return 2;
    }
  }
  auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

  int unexpected = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << o.detail;
    if (!o.pass && known.count(id)) std::cout << " [known failure]";
    std::cout << std::endl;
    if (!o.pass && !known.count(id)) ++unexpected;
  };

  if (wanted(1)) report(1, "metric oracles", metric_oracles());
  if (wanted(2)) report(2, "GNS kernel", gns_kernel());
  if (wanted(3)) report(3, "GGD shape sanity", mscn_sanity());
  if (wanted(4)) report(4, "optimizer invariants", optimizer_invariants());
  if (wanted(5) || wanted(6)) {
    const DeskRun desk = desk_comparison();
    if (wanted(5)) report(5, "desk-scale comparison direction", paper_direction(desk));
    if (wanted(6)) report(6, "BFORE >= BFORE-default", default_dominance(desk));
  }
  if (wanted(7) || wanted(8)) {
    const ScalabilityRun sc = scalability_run();
    if (wanted(7)) report(7, "scalability direction", scalability_direction(sc));
    if (wanted(8)) report(8, "GNS-NIQE agreement", gns_niqe_agreement(sc));
  }
  if (wanted(9)) report(9, "Wilcoxon exact path", wilcoxon_enumeration());
  if (wanted(10)) report(10, "CLI benchmark smoke", cli_smoke());
  return unexpected == 0 ? 0 : 1;
}
