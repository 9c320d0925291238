#include "bfore/data.hpp"
#include "bfore/errors.hpp"
#include "bfore/quality.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace bfore;
using bfore::test::random_rgb;
using bfore::test::TempDir;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec(int count = 3) {
  SyntheticSpec s;
  s.count = count;
  s.width = 64;
  s.height = 48;
  return s;
}

} // namespace

TEST(Hashing, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec s = small_spec();
  s.count = 0;
  EXPECT_THROW(s.validate(), ContractError);
  EXPECT_THROW(synthesize_pair(small_spec(), 3), ContractError);
  EXPECT_EQ(small_spec().to_json().at("seed"), 1234);
}

TEST(Synthetic, PairIsPureFunctionOfSpecAndIndex) {
  const SyntheticPair a = synthesize_pair(small_spec(), 1);
  const SyntheticPair b = synthesize_pair(small_spec(), 1);
  EXPECT_EQ(a.id, "syn_001");
  EXPECT_TRUE(a.low == b.low);
  EXPECT_TRUE(a.reference == b.reference);
  EXPECT_EQ(a.gamma, b.gamma);
  SyntheticSpec other = small_spec();
  other.seed = 99;
  EXPECT_FALSE(synthesize_pair(other, 1).reference == a.reference);
}

TEST(Synthetic, LowIsDarkerAndFurtherFromNaturalStatistics) {
  const SyntheticSpec spec = small_spec(8);
  for (int i = 0; i < spec.count; ++i) {
    const SyntheticPair p = synthesize_pair(spec, i);
    EXPECT_LT(p.low.value().mean(), p.reference.value().mean()) << p.id;
    EXPECT_GT(gns(p.reference).total, gns(p.low).total) << p.id;
    EXPECT_GE(p.gamma, spec.gamma_lo);
    EXPECT_LE(p.gamma, spec.gamma_hi);
    EXPECT_GE(p.noise_sigma, spec.noise_lo);
    EXPECT_LE(p.noise_sigma, spec.noise_hi);
  }
}

TEST(Synthetic, DefaultCorpusReferenceStatistics) {
  const SyntheticSpec spec;
  int rich = 0;
  for (int i = 0; i < spec.count; ++i) {
    const ImageBuffer ref = synthetic_reference(spec.width, spec.height, derive_seed(spec.seed, {static_cast<std::uint64_t>(i), 0}));
    const Plane v = ref.value();
    if (entropy(v) > 6.0) ++rich;
    EXPECT_GE(v.mean(), 0.35);
    EXPECT_LE(v.mean(), 0.65);
  }
  EXPECT_GE(rich, 28);
}

TEST(Synthetic, GenerationIsByteIdentical) {
  TempDir a, b;
  const GeneratedDataset ga = generate_synthetic(small_spec(), a.path());
  const GeneratedDataset gb = generate_synthetic(small_spec(), b.path(), 2);
  ASSERT_EQ(ga.dataset.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(file_hash(ga.dataset.entries[i].low), file_hash(gb.dataset.entries[i].low));
    EXPECT_EQ(file_hash(*ga.dataset.entries[i].ref), file_hash(*gb.dataset.entries[i].ref));
  }
  EXPECT_EQ(dataset_hash(ga.dataset), dataset_hash(gb.dataset));
  EXPECT_EQ(file_hash(a / "manifest.json"), file_hash(b / "manifest.json"));
  EXPECT_TRUE(ga.qa.gns_violations.empty());
  EXPECT_EQ(dataset_hash(load_manifest(a / "manifest.json")), dataset_hash(ga.dataset));
}

TEST(Manifest, RoundTripWithRelativePaths) {
  TempDir dir;
  const GeneratedDataset g = generate_synthetic(small_spec(2), dir.path());
  const PairedDataset loaded = load_manifest(dir / "manifest.json");
  EXPECT_EQ(loaded.origin, DatasetOrigin::SYNTHETIC);
  EXPECT_EQ(loaded.seed, 1234u);
  ASSERT_EQ(loaded.size(), 2u);
  EXPECT_EQ(loaded.entries[0].id, "syn_000");
  EXPECT_TRUE(fs::equivalent(loaded.entries[1].low, g.dataset.entries[1].low));
  std::ifstream in(dir / "manifest.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j.at("entries").at(0).at("low"), "low/syn_000.png");
  EXPECT_EQ(j.at("entries").at(0).at("ref"), "high/syn_000.png");

  std::ofstream(dir / "bad.json") << "{\"origin\": \"LOL\", \"entries\": [{\"id\": \"x\", \"low\": \"a.png\"}]}";
  EXPECT_THROW(load_manifest(dir / "bad.json"), DecodeError);
  std::ofstream(dir / "junk.json") << "{not json";
  EXPECT_THROW(load_manifest(dir / "junk.json"), DecodeError);
  EXPECT_THROW(load_manifest(dir / "missing.json"), IoError);
}

TEST(Loaders, PairedDirectoryMatchingByStem) {
  TempDir dir;
  fs::create_directories(dir / "low");
  fs::create_directories(dir / "high");
  for (const std::string stem : {"c", "a", "b", "d"}) save_image(random_rgb(12, 10, stem[0]), dir / "low" / (stem + ".png"));
  for (const std::string stem : {"a", "b", "c", "e"}) save_image(random_rgb(12, 10, stem[0]), dir / "high" / (stem + ".png"));
  save_image(random_rgb(14, 10, 1), dir / "high" / "c.png");

  LoadReport rep;
  const PairedDataset ds = load_paired_dir(dir / "low", dir / "high", 0, &rep);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.entries[0].id, "a");
  EXPECT_EQ(ds.entries[1].id, "b");
  EXPECT_EQ(rep.matched, 2);
  EXPECT_EQ(rep.unmatched_low, 1);
  EXPECT_EQ(rep.unmatched_high, 1);
  EXPECT_EQ(rep.rejected_dimensions, 1);
  EXPECT_TRUE(ds.has_references());

  const PairedDataset first = load_paired_dir(dir / "low", dir / "high", 1);
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first.entries[0].id, "a");
}

TEST(Loaders, EmptyDirectoriesGiveNotice) {
  TempDir dir;
  fs::create_directories(dir / "low");
  fs::create_directories(dir / "high");
  LoadReport rep;
  EXPECT_EQ(load_paired_dir(dir / "low", dir / "high", 0, &rep).size(), 0u);
  ASSERT_FALSE(rep.notices.empty());
  EXPECT_EQ(rep.notices.back(), "dataset is empty");
  EXPECT_THROW(load_paired_dir(dir / "nope", dir / "high"), IoError);
}

TEST(Loaders, UnpairedAcceptsMixedSizesAndRefusesReferences) {
  TempDir dir;
  save_image(random_rgb(12, 10, 1), dir / "x.png");
  save_image(random_rgb(20, 16, 2), dir / "y.bmp");
  std::ofstream(dir / "notes.txt") << "skip";
  const PairedDataset ds = load_unpaired_dir(dir.path());
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_FALSE(ds.has_references());
  EXPECT_FALSE(ds.entries[0].ref.has_value());
  EXPECT_THROW(ds.require_references("psnr"), CapabilityError);
  EXPECT_EQ(to_string(ds.origin), "UNPAIRED");
  EXPECT_EQ(origin_from_string("UNPAIRED"), DatasetOrigin::UNPAIRED);
}
