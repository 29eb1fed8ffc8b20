#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace camadapt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// One feature vector with its provenance. (camera_id, person_id, image_id)
/// is unique within a dataset; features are finite doubles of length
/// NetworkDataset::dimension.
struct Sample {
  std::string camera_id;
  std::string person_id;
  std::string image_id;
  Vector features;
};

struct NetworkDataset {
  int dimension = 0;
  std::vector<std::string> cameras;  // ordered as listed in the manifest
  std::vector<Sample> samples;
};

/// Feature rows plus aligned label columns for one camera.
struct LabeledSet {
  Matrix features;  // n x D, one sample per row
  std::vector<std::string> person_ids;
  std::vector<std::string> image_ids;

  Eigen::Index size() const { return features.rows(); }
};

/// Feature rows with identity labels erased. Adaptation against a target
/// camera accepts only this view, so target labels cannot be read.
struct UnlabeledSet {
  Matrix features;  // n x D

  Eigen::Index size() const { return features.rows(); }
};

inline UnlabeledSet strip_labels(const LabeledSet& s) { return UnlabeledSet{s.features}; }

}  // namespace camadapt
