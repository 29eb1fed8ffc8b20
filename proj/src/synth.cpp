#include "camadapt/synth.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"
#include "camadapt/rng.hpp"

namespace camadapt {

namespace {

constexpr double kHalfPi = 1.5707963267948966;
constexpr double kBiasScale = 2.5;
constexpr double kLatentMeanScale = 4.0;

void validate(const SynthConfig& c) {
  if (c.n_cameras < 1 || c.n_identities < 1 || c.images_per_identity < 1 || c.latent_dim < 1 ||
      c.feature_dim < c.latent_dim)
    fail(Errc::invalid_config, "generate_network: counts must be positive and feature_dim >= latent_dim");
  if (static_cast<int>(c.shift_angles.size()) != c.n_cameras)
    fail(Errc::invalid_config, "generate_network: need one shift angle per camera");
  for (double a : c.shift_angles)
    if (!(a >= 0.0 && a <= kHalfPi))
      fail(Errc::invalid_config, "generate_network: shift angles must lie in [0, pi/2]");
  if (c.noise_sigma < 0.0) fail(Errc::invalid_config, "generate_network: noise_sigma must be >= 0");
}

/// Seeded random orthogonal D x D matrix (QR of a Gaussian draw, sign-fixed
/// so the factorization is unique).
Matrix random_orthogonal(int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

std::string zero_pad(int value, int width) {
  std::string s = std::to_string(value);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

SynthResult generate_network(const SynthConfig& cfg) {
  validate(cfg);
  const int d = cfg.feature_dim;
  const int m = cfg.latent_dim;

  const Matrix q = random_orthogonal(d, derive_seed(cfg.seed, hash_str("synth-basis")));
  const Matrix base = q.leftCols(m);
  // Rotation plane (q0, q_r): r picks a complement direction when one exists,
  // so unequal angles tilt the camera's feature subspace itself.
  const int r = std::min(m, d - 1);
  const Vector q0 = q.col(0);
  const Vector qr = q.col(r);
  // The per-camera mean shift must live in a direction every camera's
  // subspace keeps (a shared base axis): flow kernels weight shared
  // directions fully, so the shift separates camera pairs by angle gap. A
  // shift along a discarded direction would be invisible to the kernel
  // distance.
  const Vector q_bias = q.col(std::min(1, m - 1));

  std::vector<Matrix> maps(cfg.n_cameras);
  std::vector<Vector> biases(cfg.n_cameras);
  for (int c = 0; c < cfg.n_cameras; ++c) {
    const double a = cfg.shift_angles[c];
    Matrix map = base;
    map.col(0) = std::cos(a) * q0 + std::sin(a) * qr;
    if (r < m) map.col(r) = -std::sin(a) * q0 + std::cos(a) * qr;
    maps[c] = std::move(map);
    biases[c] = kBiasScale * a * q_bias;
  }

  // Latent variances decay harmonically so a camera's principal directions
  // come out in a fixed order and the rotated axis (index 0) is always the
  // dominant one; with equal variances the estimated top-d subspace would be
  // an arbitrary slice and the planted divergence would be invisible.
  //
  // The shared latent mean matters just as much: image features have a large
  // common offset, and the average pairwise distance between two cameras
  // separates by angle through the (mean_S - mean_T) quadratic form. Centered
  // clouds would cancel that term and leave only the trace part, which
  // *shrinks* with misalignment and would invert the planted ordering.
  Vector latent_mean(m);
  for (int k = 0; k < m; ++k) latent_mean(k) = kLatentMeanScale / std::sqrt(1.0 + k);
  std::vector<Vector> latents(cfg.n_identities);
  for (int p = 0; p < cfg.n_identities; ++p) {
    Rng rng(derive_seed(cfg.seed, hash_str("latent"), static_cast<std::uint64_t>(p)));
    latents[p].resize(m);
    for (int k = 0; k < m; ++k) {
      latents[p](k) = latent_mean(k) + rng.gaussian() / std::sqrt(1.0 + k);
    }
  }

  const int id_width = static_cast<int>(std::to_string(cfg.n_identities - 1).size());
  SynthResult result;
  result.dataset.dimension = d;
  result.dataset.samples.reserve(
      static_cast<std::size_t>(cfg.n_cameras) * cfg.n_identities * cfg.images_per_identity);
  for (int c = 0; c < cfg.n_cameras; ++c) {
    const std::string cam_id = "cam" + std::to_string(c);
    result.dataset.cameras.push_back(cam_id);
    for (int p = 0; p < cfg.n_identities; ++p) {
      const Vector clean = maps[c] * latents[p] + biases[c];
      for (int img = 0; img < cfg.images_per_identity; ++img) {
        Sample s;
        s.camera_id = cam_id;
        s.person_id = "p" + zero_pad(p, id_width);
        s.image_id = "i" + std::to_string(img);
        s.features = clean;
        if (cfg.noise_sigma > 0.0) {
          Rng rng(derive_seed(cfg.seed, hash_str(cam_id) ^ hash_str("noise"),
                              static_cast<std::uint64_t>(p) * 1000003ULL +
                                  static_cast<std::uint64_t>(img)));
          for (int k = 0; k < d; ++k) s.features(k) += cfg.noise_sigma * rng.gaussian();
        }
        result.dataset.samples.push_back(std::move(s));
      }
    }
  }

  result.truth.angles = cfg.shift_angles;
  result.truth.divergence.resize(cfg.n_cameras, cfg.n_cameras);
  for (int i = 0; i < cfg.n_cameras; ++i)
    for (int j = 0; j < cfg.n_cameras; ++j)
      result.truth.divergence(i, j) = std::abs(cfg.shift_angles[i] - cfg.shift_angles[j]);
  return result;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  Json j;
  Json angles = Json::array();
  for (double a : gt.angles) angles.push_back(a);
  j["angles"] = std::move(angles);
  j["divergence"] = matrix_to_json(gt.divergence);
  write_json_file(path, j);
}

}  // namespace camadapt
