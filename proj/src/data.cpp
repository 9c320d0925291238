#include "bfore/data.hpp"

#include "bfore/errors.hpp"
#include "bfore/parallel.hpp"
#include "bfore/quality.hpp"
#include "bfore/retinex.hpp"
#include "bfore/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>

namespace fs = std::filesystem;

namespace bfore {

std::string_view to_string(DatasetOrigin o) {
  switch (o) {
    case DatasetOrigin::SYNTHETIC: return "SYNTHETIC";
    case DatasetOrigin::LOL: return "LOL";
    case DatasetOrigin::UNPAIRED: return "UNPAIRED";
  }
  return "?";
}

DatasetOrigin origin_from_string(std::string_view s) {
  if (s == "SYNTHETIC") return DatasetOrigin::SYNTHETIC;
  if (s == "LOL") return DatasetOrigin::LOL;
  if (s == "UNPAIRED") return DatasetOrigin::UNPAIRED;
  throw DecodeError("unknown dataset origin '" + std::string(s) + "'");
}

void PairedDataset::require_references(std::string_view op) const {
  if (!has_references())
    throw CapabilityError(std::string(op) + ": dataset is UNPAIRED; full-reference metrics are unavailable");
}

namespace {

std::string relative_string(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  return p.lexically_relative(base).generic_string();
}

fs::path resolve(const std::string& s, const fs::path& base) {
  const fs::path p(s);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string lower_ext(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

} // namespace

nlohmann::json PairedDataset::to_json(const fs::path& base) const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json item{{"id", e.id}, {"low", relative_string(e.low, base)}};
    if (e.ref) item["ref"] = relative_string(*e.ref, base);
    list.push_back(std::move(item));
  }
  return {{"origin", to_string(origin)}, {"seed", seed}, {"entries", list}, {"spec", spec}};
}

PairedDataset PairedDataset::from_json(const nlohmann::json& j, const fs::path& base) {
  PairedDataset ds;
  try {
    ds.origin = origin_from_string(j.at("origin").get<std::string>());
    ds.seed = j.value("seed", std::uint64_t{0});
    ds.spec = j.value("spec", nlohmann::json::object());
    for (const auto& item : j.at("entries")) {
      DatasetEntry e;
      e.id = item.at("id").get<std::string>();
      e.low = resolve(item.at("low").get<std::string>(), base);
      if (item.contains("ref")) e.ref = resolve(item.at("ref").get<std::string>(), base);
      if (ds.origin != DatasetOrigin::UNPAIRED && !e.ref) throw DecodeError("manifest entry '" + e.id + "' lacks a reference");
      ds.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed dataset manifest: ") + e.what());
  }
  return ds;
}

void save_manifest(const PairedDataset& ds, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << ds.to_json(path.parent_path()).dump(2) << '\n';
}

PairedDataset load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError("manifest " + path.string() + ": " + e.what());
  }
  return PairedDataset::from_json(j, path.parent_path());
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string dataset_hash(const PairedDataset& ds) {
  nlohmann::json j = ds.to_json();
  // Hash content, not location: paths are reduced to file names.
  for (auto& item : j["entries"]) {
    item["low"] = fs::path(item["low"].get<std::string>()).filename().string();
    if (item.contains("ref")) item["ref"] = fs::path(item["ref"].get<std::string>()).filename().string();
  }
  std::uint64_t h = fnv1a64(j.dump());
  for (const auto& e : ds.entries) {
    h = fnv1a64(hex64(file_hash(e.low)), h);
    if (e.ref) h = fnv1a64(hex64(file_hash(*e.ref)), h);
  }
  return hex64(h);
}

// ---------------------------------------------------------------------------
// Synthetic corpus

void SyntheticSpec::validate() const {
  if (count <= 0) throw ContractError("SyntheticSpec: count must be positive");
  if (width < 32 || height < 32) throw ContractError("SyntheticSpec: images must be at least 32x32");
  if (!(gamma_lo >= 1.0 && gamma_lo <= gamma_hi)) throw ContractError("SyntheticSpec: need 1 <= gamma_lo <= gamma_hi");
  if (!(noise_lo >= 0.0 && noise_lo <= noise_hi)) throw ContractError("SyntheticSpec: need 0 <= noise_lo <= noise_hi");
}

nlohmann::json SyntheticSpec::to_json() const {
  return {{"count", count},       {"width", width},       {"height", height},
          {"gamma_range", {gamma_lo, gamma_hi}},          {"noise_sigma_range", {noise_lo, noise_hi}},
          {"seed", seed}};
}

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Smoothly interpolated lattice noise in [0, 1] with the given cell size.
Plane value_noise(int width, int height, double cell, Rng& rng) {
  const int gw = static_cast<int>(std::ceil(width / cell)) + 2;
  const int gh = static_cast<int>(std::ceil(height / cell)) + 2;
  Plane lattice(gh, gw);
  for (int gx = 0; gx < gw; ++gx)
    for (int gy = 0; gy < gh; ++gy) lattice(gy, gx) = rng.uniform();
  const double ox = rng.uniform();
  const double oy = rng.uniform();
  Plane out(height, width);
  for (int x = 0; x < width; ++x) {
    const double fx = x / cell + ox;
    const int ix = static_cast<int>(fx);
    const double tx = smoothstep(fx - ix);
    for (int y = 0; y < height; ++y) {
      const double fy = y / cell + oy;
      const int iy = static_cast<int>(fy);
      const double ty = smoothstep(fy - iy);
      const double top = lattice(iy, ix) * (1.0 - tx) + lattice(iy, ix + 1) * tx;
      const double bottom = lattice(iy + 1, ix) * (1.0 - tx) + lattice(iy + 1, ix + 1) * tx;
      out(y, x) = top * (1.0 - ty) + bottom * ty;
    }
  }
  return out;
}

Plane fbm(int width, int height, Rng& rng, double persistence, double start_cell) {
  double cell = start_cell;
  double amp = 1.0;
  double total = 0.0;
  Plane acc = Plane::Zero(height, width);
  while (cell >= 1.5) {
    acc += amp * value_noise(width, height, cell, rng);
    total += amp;
    amp *= persistence;
    cell /= 2.0;
  }
  return acc / total;
}

double mean_after_gamma(const Plane& v, double g) { return v.pow(g).mean(); }

} // namespace

ImageBuffer synthetic_reference(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  const double persistence = rng.uniform(0.55, 0.7);
  const double coarse = std::max(width, height) / 3.0;
  const Plane base = fbm(width, height, rng, persistence, coarse);
  const Plane detail = fbm(width, height, rng, 0.9, 4.0) - 0.5;

  // Linear gradient along a random direction.
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Plane gradient(height, width);
  for (int x = 0; x < width; ++x)
    for (int y = 0; y < height; ++y)
      gradient(y, x) = (std::cos(angle) * x / width + std::sin(angle) * y / height + 1.0) / 2.0;

  std::array<double, 3> tint;
  for (double& t : tint) t = rng.uniform(0.6, 1.0);
  std::array<Plane, 3> chan;
  for (int c = 0; c < 3; ++c) {
    const Plane color_noise = fbm(width, height, rng, persistence, coarse);
    chan[static_cast<std::size_t>(c)] =
        tint[static_cast<std::size_t>(c)] * (0.6 * base + 0.25 * gradient + 0.6 * detail) + 0.15 * color_noise;
  }

  // Soft-edged ellipses.
  const int shapes = 6 + static_cast<int>(rng.index(5));
  for (int s = 0; s < shapes; ++s) {
    const double cx = rng.uniform(0.0, width);
    const double cy = rng.uniform(0.0, height);
    const double rx = rng.uniform(0.05, 0.25) * width;
    const double ry = rng.uniform(0.05, 0.25) * height;
    const double rot = rng.uniform(0.0, std::numbers::pi);
    const double softness = rng.uniform(0.05, 0.3);
    std::array<double, 3> delta;
    for (double& d : delta) d = rng.uniform(-0.35, 0.35);
    const double cr = std::cos(rot), sr = std::sin(rot);
    for (int x = 0; x < width; ++x) {
      for (int y = 0; y < height; ++y) {
        const double dx = x - cx, dy = y - cy;
        const double u = (cr * dx + sr * dy) / rx;
        const double v = (-sr * dx + cr * dy) / ry;
        const double d = std::sqrt(u * u + v * v);
        const double mask = 1.0 / (1.0 + std::exp(-(1.0 - d) / softness));
        for (int c = 0; c < 3; ++c) chan[static_cast<std::size_t>(c)](y, x) += mask * delta[static_cast<std::size_t>(c)];
      }
    }
  }

  // Tone map on V: percentile stretch, then a gamma that sets the mean.
  Plane v = chan[0].max(chan[1]).max(chan[2]);
  std::vector<double> vals(v.data(), v.data() + v.size());
  const double p1 = percentile(vals, 0.01);
  const double p99 = percentile(std::move(vals), 0.99);
  const double scale = p99 > p1 ? 0.94 / (p99 - p1) : 1.0;
  for (auto& c : chan) c = ((c - p1) * scale + 0.03).max(0.0).min(1.0);
  v = chan[0].max(chan[1]).max(chan[2]);

  const double target = rng.uniform(0.42, 0.58);
  double lo = 0.2, hi = 5.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_after_gamma(v, mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  const double g = 0.5 * (lo + hi);
  for (auto& c : chan) c = c.pow(g);
  return ImageBuffer::rgb(std::move(chan[0]), std::move(chan[1]), std::move(chan[2]));
}

SyntheticPair synthesize_pair(const SyntheticSpec& spec, int index) {
  spec.validate();
  if (index < 0 || index >= spec.count) throw ContractError("synthesize_pair: index out of range");
  const auto idx = static_cast<std::uint64_t>(index);
  SyntheticPair pair;
  char id[32];
  std::snprintf(id, sizeof id, "syn_%03d", index);
  pair.id = id;
  pair.reference = synthetic_reference(spec.width, spec.height, derive_seed(spec.seed, {idx, 0}));

  Rng params(derive_seed(spec.seed, {idx, 1}));
  pair.gamma = params.uniform(spec.gamma_lo, spec.gamma_hi);
  pair.noise_sigma = params.uniform(spec.noise_lo, spec.noise_hi);

  Rng noise(derive_seed(spec.seed, {idx, 2}));
  std::vector<Plane> planes;
  for (int c = 0; c < 3; ++c) {
    Plane p = pair.reference.channel(c).pow(pair.gamma);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) += noise.normal() * pair.noise_sigma / 255.0;
    planes.push_back(p.max(0.0).min(1.0));
  }
  pair.low = ImageBuffer::from_planes(std::move(planes), ColorSpace::RGB);
  return pair;
}

GeneratedDataset generate_synthetic(const SyntheticSpec& spec, const fs::path& out_dir, int workers) {
  spec.validate();
  fs::create_directories(out_dir / "low");
  fs::create_directories(out_dir / "high");

  const auto n = static_cast<std::size_t>(spec.count);
  std::vector<DatasetEntry> entries(n);
  std::vector<double> ref_entropy(n), gns_ref(n), gns_low(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const SyntheticPair pair = synthesize_pair(spec, static_cast<int>(i));
    const fs::path low = out_dir / "low" / (pair.id + ".png");
    const fs::path high = out_dir / "high" / (pair.id + ".png");
    save_image(pair.low, low);
    save_image(pair.reference, high);
    entries[i] = {pair.id, low, high};
    ref_entropy[i] = entropy(pair.reference.value());
    gns_ref[i] = gns(pair.reference).total;
    gns_low[i] = gns(pair.low).total;
  });

  GeneratedDataset out;
  out.dataset.origin = DatasetOrigin::SYNTHETIC;
  out.dataset.seed = spec.seed;
  out.dataset.spec = spec.to_json();
  out.dataset.entries = std::move(entries);
  for (std::size_t i = 0; i < n; ++i) {
    if (ref_entropy[i] > 6.0) ++out.qa.entropy_above_6;
    if (!(gns_ref[i] > gns_low[i])) out.qa.gns_violations.push_back(out.dataset.entries[i].id);
  }
  save_manifest(out.dataset, out_dir / "manifest.json");
  return out;
}

// ---------------------------------------------------------------------------
// Loaders

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string ext = lower_ext(entry.path());
    if (entry.is_regular_file() && (ext == ".png" || ext == ".bmp")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

PairedDataset load_paired_dir(const fs::path& low_dir, const fs::path& high_dir, std::size_t take_first,
                              LoadReport* report) {
  LoadReport local;
  LoadReport& rep = report ? *report : local;
  std::map<std::string, fs::path> lows, highs;
  for (const auto& p : list_images(low_dir)) lows.emplace(p.stem().string(), p);
  for (const auto& p : list_images(high_dir)) highs.emplace(p.stem().string(), p);

  PairedDataset ds;
  ds.origin = DatasetOrigin::LOL;
  for (const auto& [stem, low] : lows) {
    const auto it = highs.find(stem);
    if (it == highs.end()) {
      ++rep.unmatched_low;
      rep.notices.push_back("no reference for '" + stem + "'");
      continue;
    }
    if (take_first > 0 && ds.entries.size() >= take_first) break;
    const ImageBuffer a = load_image(low);
    const ImageBuffer b = load_image(it->second);
    if (a.width() != b.width() || a.height() != b.height()) {
      ++rep.rejected_dimensions;
      rep.notices.push_back("dimension mismatch for '" + stem + "', entry rejected");
      std::cerr << "warning: dimension mismatch for '" << stem << "', entry rejected\n";
      continue;
    }
    ds.entries.push_back({stem, low, it->second});
    ++rep.matched;
  }
  for (const auto& [stem, high] : highs)
    if (!lows.count(stem)) ++rep.unmatched_high;
  if (ds.entries.empty()) rep.notices.push_back("dataset is empty");
  return ds;
}

PairedDataset load_unpaired_dir(const fs::path& dir, LoadReport* report) {
  PairedDataset ds;
  ds.origin = DatasetOrigin::UNPAIRED;
  for (const auto& p : list_images(dir)) ds.entries.push_back({p.stem().string(), p, std::nullopt});
  if (report) {
    report->matched = static_cast<int>(ds.entries.size());
    if (ds.entries.empty()) report->notices.push_back("dataset is empty");
  }
  return ds;
}

} // namespace bfore
