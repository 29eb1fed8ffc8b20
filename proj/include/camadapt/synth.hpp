#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "camadapt/types.hpp"

namespace camadapt {

/// Recipe for a synthetic multi-camera network with a planted notion of which
/// cameras are close: camera c observes x = A_c z_p + b_c + noise, where A_c
/// is a shared orthonormal base map rotated by shift_angles[c] in a fixed
/// 2-plane that mixes the base range with its orthogonal complement. Equal
/// angles mean identical camera transforms; the pairwise angle gap is the
/// ground-truth divergence.
struct SynthConfig {
  int n_cameras = 0;
  int n_identities = 0;
  int images_per_identity = 1;
  int latent_dim = 0;           // m
  int feature_dim = 0;          // D >= m
  std::vector<double> shift_angles;  // radians, one per camera, in [0, pi/2]
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct GroundTruth {
  std::vector<double> angles;
  Matrix divergence;  // |angles[i] - angles[j]|
};

struct SynthResult {
  NetworkDataset dataset;
  GroundTruth truth;
};

SynthResult generate_network(const SynthConfig& config);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);

}  // namespace camadapt
