#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "camadapt/types.hpp"

namespace camadapt {

enum class SubspaceMethod { pca, pls };

/// D x d orthonormal basis for one camera's feature cloud (basis^T basis = I,
/// d < D). PCA bases come from unlabeled data, PLS bases from labeled data.
struct Subspace {
  Matrix basis;  // D x d, orthonormal columns
  SubspaceMethod method = SubspaceMethod::pca;
  std::string camera_id;

  Eigen::Index dim() const { return basis.rows(); }
  Eigen::Index rank() const { return basis.cols(); }
};

/// Principal angles between two subspaces, ascending, each in [0, pi/2].
struct PrincipalAngles {
  Vector angles;
};

/// Top-d principal directions of the mean-centered rows.
Subspace pca_subspace(const Matrix& rows, int d, const std::string& camera_id = {});

/// NIPALS PLS2 against a one-hot identity response, X deflated per component;
/// the d X-weight vectors are QR-orthonormalized into the basis.
Subspace pls_subspace(const Matrix& rows, const std::vector<std::string>& labels, int d,
                      const std::string& camera_id = {});

/// D x (D-d) orthonormal completion: [basis | complement] is orthogonal.
Matrix orthogonal_complement(const Matrix& basis);
inline Matrix orthogonal_complement(const Subspace& sub) {
  return orthogonal_complement(sub.basis);
}

PrincipalAngles principal_angles(const Subspace& a, const Subspace& b);

void save_subspace(const Subspace& s, const std::filesystem::path& path);
Subspace load_subspace(const std::filesystem::path& path);

}  // namespace camadapt
