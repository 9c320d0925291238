#pragma once

#include "bfore/image.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bfore {

enum class DatasetOrigin { SYNTHETIC, LOL, UNPAIRED };

std::string_view to_string(DatasetOrigin o);
DatasetOrigin origin_from_string(std::string_view s);

struct DatasetEntry {
  std::string id;
  std::filesystem::path low;
  std::optional<std::filesystem::path> ref;
};

/// Ordered image list. Invariant: every entry has a reference unless origin is UNPAIRED.
struct PairedDataset {
  DatasetOrigin origin = DatasetOrigin::UNPAIRED;
  std::vector<DatasetEntry> entries;
  std::uint64_t seed = 0;
  nlohmann::json spec = nlohmann::json::object();

  std::size_t size() const noexcept { return entries.size(); }
  bool has_references() const noexcept { return origin != DatasetOrigin::UNPAIRED; }
  /// Throws CapabilityError when full-reference data is requested from an unpaired set.
  void require_references(std::string_view op) const;

  /// {origin, seed, entries: [{id, low, ref?}], spec}; paths relative to `base`.
  nlohmann::json to_json(const std::filesystem::path& base = {}) const;
  static PairedDataset from_json(const nlohmann::json& j, const std::filesystem::path& base = {});
};

/// Writes the manifest with paths relative to its directory.
void save_manifest(const PairedDataset& ds, const std::filesystem::path& path);
PairedDataset load_manifest(const std::filesystem::path& path);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t file_hash(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);
/// Hash of the manifest JSON and the bytes of every referenced file.
std::string dataset_hash(const PairedDataset& ds);

struct SyntheticSpec {
  int count = 30;
  int width = 600;
  int height = 400;
  double gamma_lo = 2.5;
  double gamma_hi = 4.0;
  /// Noise standard deviation on the 0..255 scale.
  double noise_lo = 2.0;
  double noise_hi = 8.0;
  std::uint64_t seed = 1234;

  void validate() const;
  nlohmann::json to_json() const;
};

struct SyntheticPair {
  std::string id;
  ImageBuffer low;
  ImageBuffer reference;
  double gamma = 0.0;
  double noise_sigma = 0.0;
};

/// Procedural reference (value-noise octaves, gradient, soft ellipses) tone-mapped to a
/// mid-grey mean V. Pure function of (width, height, seed).
ImageBuffer synthetic_reference(int width, int height, std::uint64_t seed);

/// Pair `index` of the corpus: low = clamp(reference^gamma + N(0, (sigma/255)^2)).
SyntheticPair synthesize_pair(const SyntheticSpec& spec, int index);

struct SyntheticQa {
  int entropy_above_6 = 0;
  std::vector<std::string> gns_violations;
};

struct GeneratedDataset {
  PairedDataset dataset;
  SyntheticQa qa;
};

/// Writes low/<id>.png, high/<id>.png and manifest.json under `out_dir`.
GeneratedDataset generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir, int workers = 1);

struct LoadReport {
  int matched = 0;
  int unmatched_low = 0;
  int unmatched_high = 0;
  int rejected_dimensions = 0;
  std::vector<std::string> notices;
};

/// Pairs files by stem, sorted by stem; take_first = 0 keeps all.
PairedDataset load_paired_dir(const std::filesystem::path& low_dir, const std::filesystem::path& high_dir,
                              std::size_t take_first = 0, LoadReport* report = nullptr);

/// Every PNG/BMP in `dir`, sorted by name, without references.
PairedDataset load_unpaired_dir(const std::filesystem::path& dir, LoadReport* report = nullptr);

/// Sorted PNG/BMP files directly inside `dir`.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

} // namespace bfore
