#include "bfore/niqe.hpp"

#include "bfore/data.hpp"
#include "bfore/errors.hpp"
#include "bfore/quality.hpp"
#include "bfore/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

namespace bfore {

namespace {

Plane downsample2(const Plane& p) {
  const Eigen::Index rows = p.rows() / 2;
  const Eigen::Index cols = p.cols() / 2;
  Plane out(rows, cols);
  for (Eigen::Index x = 0; x < cols; ++x)
    for (Eigen::Index y = 0; y < rows; ++y)
      out(y, x) = 0.25 * (p(2 * y, 2 * x) + p(2 * y + 1, 2 * x) + p(2 * y, 2 * x + 1) + p(2 * y + 1, 2 * x + 1));
  return out;
}

// 18 features of one ps x ps patch of an MSCN field, top-left corner (y0, x0).
Eigen::Matrix<double, kNiqeFeatures, 1> patch_features(const Plane& m, Eigen::Index y0, Eigen::Index x0,
                                                       Eigen::Index ps) {
  Eigen::Matrix<double, kNiqeFeatures, 1> f;
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(ps * ps));
  double sq = 0.0;
  for (Eigen::Index x = 0; x < ps; ++x)
    for (Eigen::Index y = 0; y < ps; ++y) {
      const double v = m(y0 + y, x0 + x);
      samples.push_back(v);
      sq += v * v;
    }
  f[0] = ggd_shape(samples).alpha;
  f[1] = sq / static_cast<double>(samples.size());

  // Neighbour offsets (dy, dx): horizontal, vertical, main diagonal, anti-diagonal.
  static constexpr int offsets[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
  for (int o = 0; o < 4; ++o) {
    const int dy = offsets[o][0];
    const int dx = offsets[o][1];
    samples.clear();
    for (Eigen::Index x = std::max<Eigen::Index>(0, -dx); x < ps - std::max(0, dx); ++x)
      for (Eigen::Index y = 0; y < ps - dy; ++y)
        samples.push_back(m(y0 + y, x0 + x) * m(y0 + y + dy, x0 + x + dx));
    const AggdFit a = aggd_fit(samples);
    f[2 + 4 * o] = a.alpha;
    f[3 + 4 * o] = a.mean;
    f[4 + 4 * o] = a.left_var;
    f[5 + 4 * o] = a.right_var;
  }
  return f;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

Moments moments(const Eigen::MatrixXd& rows) {
  Moments m;
  m.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - m.mean.transpose();
  const double denom = rows.rows() > 1 ? static_cast<double>(rows.rows() - 1) : 1.0;
  m.cov = (centered.transpose() * centered) / denom;
  return m;
}

} // namespace

Eigen::MatrixXd niqe_patch_features(const Plane& gray, std::vector<double>* sharpness) {
  if (gray.rows() < kNiqePatch || gray.cols() < kNiqePatch)
    throw ContractError("niqe: image must be at least " + std::to_string(kNiqePatch) + "x" + std::to_string(kNiqePatch));
  const MscnField fine = mscn_field(gray);
  const Plane coarse = mscn(downsample2(gray));

  const Eigen::Index py = gray.rows() / kNiqePatch;
  const Eigen::Index px = gray.cols() / kNiqePatch;
  const Eigen::Index half = kNiqePatch / 2;
  Eigen::MatrixXd out(py * px, kNiqeFeatures);
  if (sharpness) sharpness->clear();
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < px; ++j) {
    for (Eigen::Index i = 0; i < py; ++i) {
      const auto f1 = patch_features(fine.coeffs, i * kNiqePatch, j * kNiqePatch, kNiqePatch);
      const auto f2 = patch_features(coarse, i * half, j * half, half);
      out.row(row++) = (0.5 * (f1 + f2)).transpose();
      if (sharpness) sharpness->push_back(fine.sigma.block(i * kNiqePatch, j * kNiqePatch, kNiqePatch, kNiqePatch).mean());
    }
  }
  return out;
}

NiqeModel fit_niqe_model(const std::vector<ImageBuffer>& corpus, std::uint64_t seed, int max_patches) {
  if (static_cast<int>(corpus.size()) < kNiqeMinCorpus)
    throw ContractError("fit_niqe_model: need at least " + std::to_string(kNiqeMinCorpus) + " pristine images, got " +
                        std::to_string(corpus.size()));
  if (max_patches < 2) throw ContractError("fit_niqe_model: max_patches must be at least 2");

  std::vector<Eigen::VectorXd> kept;
  for (const ImageBuffer& img : corpus) {
    std::vector<double> sharp;
    const Eigen::MatrixXd feats = niqe_patch_features(img.value(), &sharp);
    const double threshold = 0.75 * *std::max_element(sharp.begin(), sharp.end());
    for (Eigen::Index r = 0; r < feats.rows(); ++r)
      if (sharp[static_cast<std::size_t>(r)] >= threshold && sharp[static_cast<std::size_t>(r)] > 0.0)
        kept.emplace_back(feats.row(r).transpose());
  }
  if (kept.size() < 2) throw ContractError("fit_niqe_model: corpus has fewer than two textured patches");

  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (order.size() > static_cast<std::size_t>(max_patches)) {
    Rng rng(derive_seed(seed, {0x4e495145ULL}));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    order.resize(static_cast<std::size_t>(max_patches));
    std::sort(order.begin(), order.end());
  }

  Eigen::MatrixXd rows(static_cast<Eigen::Index>(order.size()), kNiqeFeatures);
  for (std::size_t i = 0; i < order.size(); ++i) rows.row(static_cast<Eigen::Index>(i)) = kept[order[i]].transpose();
  const Moments m = moments(rows);

  NiqeModel model;
  model.feature_means = m.mean;
  model.covariance = 0.5 * (m.cov + m.cov.transpose());
  model.corpus_size = static_cast<int>(corpus.size());
  model.fit_seed = seed;
  return model;
}

NiqeModel fit_niqe_model(const std::filesystem::path& dir, std::uint64_t seed, int max_patches) {
  const auto files = list_images(dir);
  std::vector<ImageBuffer> corpus;
  corpus.reserve(files.size());
  for (const auto& f : files) corpus.push_back(load_image(f));
  return fit_niqe_model(corpus, seed, max_patches);
}

double niqe(const ImageBuffer& img, const NiqeModel& model) {
  if (model.feature_means.size() != kNiqeFeatures || model.covariance.rows() != kNiqeFeatures ||
      model.covariance.cols() != kNiqeFeatures)
    throw ContractError("niqe: model has wrong feature dimension");
  const Moments m = moments(niqe_patch_features(img.value()));
  const Eigen::VectorXd d = model.feature_means - m.mean;
  const Eigen::MatrixXd pooled =
      0.5 * (model.covariance + m.cov) + kNiqeRidge * Eigen::MatrixXd::Identity(kNiqeFeatures, kNiqeFeatures);
  const Eigen::VectorXd solved = pooled.ldlt().solve(d);
  return std::sqrt(std::max(0.0, d.dot(solved)));
}

nlohmann::json NiqeModel::to_json() const {
  nlohmann::json j;
  j["feature_means"] = std::vector<double>(feature_means.data(), feature_means.data() + feature_means.size());
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < covariance.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(covariance.cols()));
    for (Eigen::Index c = 0; c < covariance.cols(); ++c) row[static_cast<std::size_t>(c)] = covariance(r, c);
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["corpus_size"] = corpus_size;
  j["fit_seed"] = fit_seed;
  return j;
}

NiqeModel NiqeModel::from_json(const nlohmann::json& j) {
  NiqeModel m;
  try {
    const auto means = j.at("feature_means").get<std::vector<double>>();
    const auto cov = j.at("covariance").get<std::vector<std::vector<double>>>();
    if (means.size() != kNiqeFeatures || cov.size() != kNiqeFeatures)
      throw ContractError("NiqeModel: expected 18 features");
    m.feature_means = Eigen::Map<const Eigen::VectorXd>(means.data(), kNiqeFeatures);
    m.covariance.resize(kNiqeFeatures, kNiqeFeatures);
    for (int r = 0; r < kNiqeFeatures; ++r) {
      if (cov[static_cast<std::size_t>(r)].size() != kNiqeFeatures) throw ContractError("NiqeModel: covariance must be 18x18");
      for (int c = 0; c < kNiqeFeatures; ++c) m.covariance(r, c) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    m.corpus_size = j.at("corpus_size").get<int>();
    m.fit_seed = j.at("fit_seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("NiqeModel: malformed JSON: ") + e.what());
  }
  return m;
}

void NiqeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

NiqeModel NiqeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError("NiqeModel: " + std::string(e.what()));
  }
}

} // namespace bfore
