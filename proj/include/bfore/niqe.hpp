#pragma once

#include "bfore/image.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace bfore {

inline constexpr int kNiqeFeatures = 18;
inline constexpr int kNiqePatch = 32;
inline constexpr int kNiqeMinCorpus = 20;
inline constexpr double kNiqeRidge = 1e-6;

/// Multivariate Gaussian over MSCN patch features of a pristine corpus.
struct NiqeModel {
  Eigen::VectorXd feature_means;
  Eigen::MatrixXd covariance;
  int corpus_size = 0;
  std::uint64_t fit_seed = 0;

  nlohmann::json to_json() const;
  static NiqeModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static NiqeModel load(const std::filesystem::path& path);
};

/// One row of 18 features per non-overlapping 32x32 patch: GGD (alpha, variance)
/// of the MSCN field and AGGD (alpha, mean, left var, right var) of the four
/// neighbour products, averaged with the same patch at half resolution.
/// Image must be at least 32x32.
Eigen::MatrixXd niqe_patch_features(const Plane& gray, std::vector<double>* sharpness = nullptr);

/// Fits on at least kNiqeMinCorpus images. Patches whose mean local deviation
/// is below 0.75 of the image maximum are dropped; at most `max_patches` are
/// kept, subsampled deterministically from `seed`.
NiqeModel fit_niqe_model(const std::vector<ImageBuffer>& corpus, std::uint64_t seed, int max_patches = 20000);

/// Loads every PNG/BMP in `dir` (sorted by name) and fits on them.
NiqeModel fit_niqe_model(const std::filesystem::path& dir, std::uint64_t seed, int max_patches = 20000);

/// sqrt(d^T ((S_m + S_f) / 2 + ridge I)^-1 d) with d the difference of the model
/// and image feature means. Lower is better.
double niqe(const ImageBuffer& img, const NiqeModel& model);

} // namespace bfore
