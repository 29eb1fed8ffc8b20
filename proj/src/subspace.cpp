#include "camadapt/subspace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"

namespace camadapt {

namespace {

void canonicalize_sign(Matrix& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index argmax = 0;
    basis.col(j).cwiseAbs().maxCoeff(&argmax);
    if (basis(argmax, j) < 0) basis.col(j) = -basis.col(j);
  }
}

}  // namespace

Subspace pca_subspace(const Matrix& rows, int d, const std::string& camera_id) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index dim = rows.cols();
  if (d < 1 || d >= dim || n <= d)
    fail(Errc::rank_deficient, "pca_subspace: need 1 <= d < D and more samples than d");

  const Eigen::RowVectorXd mean = rows.colwise().mean();
  Matrix centered = rows.rowwise() - mean;
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
  Matrix basis(dim, d);
  for (int j = 0; j < d; ++j) {
    const Eigen::Index src = dim - 1 - j;
    if (es.eigenvalues()(src) <= lmax * 1e-12)
      fail(Errc::rank_deficient, "pca_subspace: data rank below requested d");
    basis.col(j) = es.eigenvectors().col(src);
  }
  canonicalize_sign(basis);
  return Subspace{std::move(basis), SubspaceMethod::pca, camera_id};
}

Subspace pls_subspace(const Matrix& rows, const std::vector<std::string>& labels, int d,
                      const std::string& camera_id) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index dim = rows.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    fail(Errc::dimension_mismatch, "pls_subspace: one label per row required");
  if (d < 1 || d >= dim || n <= d)
    fail(Errc::rank_deficient, "pls_subspace: need 1 <= d < D and more samples than d");

  // One-hot response over sorted distinct labels.
  std::map<std::string, int> classes;
  for (const auto& l : labels) classes.emplace(l, 0);
  if (classes.size() < 2) fail(Errc::single_class, "pls_subspace: need >= 2 distinct labels");
  int idx = 0;
  for (auto& [label, col] : classes) col = idx++;
  Matrix y = Matrix::Zero(n, static_cast<Eigen::Index>(classes.size()));
  for (Eigen::Index i = 0; i < n; ++i) y(i, classes[labels[i]]) = 1.0;

  Matrix x = rows.rowwise() - rows.colwise().mean();
  y = y.rowwise() - y.colwise().mean();

  constexpr int kMaxInner = 500;
  constexpr double kInnerTol = 1e-12;
  Matrix weights(dim, d);
  for (int comp = 0; comp < d; ++comp) {
    // start from the response column with most variance (ties: lowest index)
    Eigen::Index start = 0;
    y.colwise().squaredNorm().maxCoeff(&start);
    Vector u = y.col(start);
    Vector w(dim), t(n), t_old = Vector::Zero(n);
    for (int it = 0; it < kMaxInner; ++it) {
      w = x.transpose() * u;
      const double wn = w.norm();
      if (wn <= 1e-14)
        fail(Errc::rank_deficient, "pls_subspace: response correlation exhausted before d components");
      w /= wn;
      t = x * w;
      Vector q = y.transpose() * t;
      const double qn = q.norm();
      if (qn <= 1e-14)
        fail(Errc::rank_deficient, "pls_subspace: response correlation exhausted before d components");
      q /= qn;
      u = y * q;
      if ((t - t_old).norm() <= kInnerTol * std::max(1.0, t.norm())) break;
      t_old = t;
    }
    const double tt = t.squaredNorm();
    if (tt <= 1e-14) fail(Errc::rank_deficient, "pls_subspace: degenerate score vector");
    Vector p = (x.transpose() * t) / tt;
    x.noalias() -= t * p.transpose();
    weights.col(comp) = w;
  }

  // The GFK construction needs an orthonormal frame, which raw PLS weights
  // are not once X has been deflated.
  Eigen::HouseholderQR<Matrix> qr(weights);
  Matrix thin_q = qr.householderQ() * Matrix::Identity(dim, d);
  Matrix r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (std::abs(r(j, j)) <= 1e-12)
      fail(Errc::rank_deficient, "pls_subspace: weight vectors not independent");
    if (r(j, j) < 0) thin_q.col(j) = -thin_q.col(j);
  }
  return Subspace{std::move(thin_q), SubspaceMethod::pls, camera_id};
}

Matrix orthogonal_complement(const Matrix& basis) {
  const Eigen::Index dim = basis.rows();
  const Eigen::Index d = basis.cols();
  if (d >= dim) fail(Errc::dimension_mismatch, "orthogonal_complement: basis already spans the space");
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ();
  Matrix complement = q.rightCols(dim - d);
  canonicalize_sign(complement);
  return complement;
}

PrincipalAngles principal_angles(const Subspace& a, const Subspace& b) {
  if (a.dim() != b.dim() || a.rank() != b.rank())
    fail(Errc::dimension_mismatch, "principal_angles: subspaces must share D and d");
  Eigen::JacobiSVD<Matrix> svd(a.basis.transpose() * b.basis);
  Vector sv = svd.singularValues();  // descending
  Vector angles(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    angles(i) = std::acos(std::clamp(sv(i), 0.0, 1.0));  // ascending angles
  return PrincipalAngles{std::move(angles)};
}

void save_subspace(const Subspace& s, const std::filesystem::path& path) {
  Json j;
  j["method"] = s.method == SubspaceMethod::pca ? "pca" : "pls";
  j["camera"] = s.camera_id;
  j["basis"] = matrix_to_json(s.basis);
  write_json_file(path, j);
}

Subspace load_subspace(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  Subspace s;
  s.method = j["method"].get<std::string>() == "pls" ? SubspaceMethod::pls : SubspaceMethod::pca;
  s.camera_id = j["camera"].get<std::string>();
  s.basis = matrix_from_json(j["basis"]);
  return s;
}

}  // namespace camadapt
