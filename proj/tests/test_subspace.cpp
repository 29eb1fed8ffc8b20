#include <doctest.h>

#include <camadapt/error.hpp>
#include <camadapt/subspace.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace camadapt;

namespace {

constexpr double kPi = 3.14159265358979323846;

// ||projection of v onto span(basis)|| / ||v||
double span_projection(const Matrix& basis, const Vector& v) {
  return (basis * (basis.transpose() * v)).norm() / v.norm();
}

}  // namespace

TEST_CASE("pca recovers an exact line") {
  Rng rng(1);
  Vector dir(3);
  dir << 2.0, -1.0, 0.5;
  dir.normalize();
  Matrix rows(100, 3);
  for (int i = 0; i < 100; ++i) rows.row(i) = (rng.gaussian() * dir).transpose();
  const Subspace s = pca_subspace(rows, 1, "line");
  CHECK(std::abs(s.basis.col(0).dot(dir)) >= 1.0 - 1e-9);
  CHECK(s.camera_id == "line");
  CHECK(s.method == SubspaceMethod::pca);
}

TEST_CASE("pca on isotropic data is only promised orthonormal") {
  Rng rng(2);
  const Matrix rows = oracle::random_gaussian(rng, 500, 4);
  const Subspace s = pca_subspace(rows, 2);
  CHECK((s.basis.transpose() * s.basis - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pca matches the jacobi eigendecomposition oracle") {
  // covariance diag(9, 4, 1): the top two directions are axes 0 and 1
  Rng rng(3);
  Matrix rows(50000, 3);
  for (int i = 0; i < 50000; ++i) {
    rows(i, 0) = 3.0 * rng.gaussian();
    rows(i, 1) = 2.0 * rng.gaussian();
    rows(i, 2) = rng.gaussian();
  }
  const Subspace s = pca_subspace(rows, 2);
  Vector e3 = Vector::Zero(3);
  e3(2) = 1.0;
  CHECK(span_projection(s.basis, e3) <= 0.05);

  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - mean;
  const oracle::EigenPair ref = oracle::jacobi_eigh(centered.transpose() * centered / 50000.0);
  for (int j = 0; j < 2; ++j) {
    CHECK(span_projection(s.basis, ref.vectors.col(j)) >= 1.0 - 1e-9);
  }
}

TEST_CASE("pca sign canonicalization is deterministic") {
  Rng rng(4);
  const Matrix rows = oracle::random_gaussian(rng, 300, 5);
  const Subspace a = pca_subspace(rows, 3);
  const Subspace b = pca_subspace(rows, 3);
  CHECK(a.basis == b.basis);
  for (int j = 0; j < 3; ++j) {
    Eigen::Index argmax = 0;
    a.basis.col(j).cwiseAbs().maxCoeff(&argmax);
    CHECK(a.basis(argmax, j) > 0.0);
  }
}

TEST_CASE("pls prefers the discriminative axis over the noisy one") {
  // classes split along axis 0; axis 1 carries 10x more variance but no label
  // signal, so PCA picks it while PLS does not
  Rng rng(5);
  Matrix rows(400, 2);
  std::vector<std::string> labels(400);
  for (int i = 0; i < 400; ++i) {
    const bool first = i % 2 == 0;
    rows(i, 0) = (first ? 1.0 : -1.0) + 0.2 * rng.gaussian();
    rows(i, 1) = 10.0 * rng.gaussian();
    labels[i] = first ? "a" : "b";
  }
  Vector e0(2), e1(2);
  e0 << 1.0, 0.0;
  e1 << 0.0, 1.0;
  const Subspace pls = pls_subspace(rows, labels, 1);
  const Subspace pca = pca_subspace(rows, 1);
  CHECK(std::abs(pls.basis.col(0).dot(e0)) >= 0.95);
  CHECK(std::abs(pca.basis.col(0).dot(e1)) >= 0.95);
  CHECK(pls.method == SubspaceMethod::pls);
}

TEST_CASE("first pls weight is the normalized centered cross-covariance") {
  Rng rng(6);
  const int n = 120, dim = 6;
  Matrix rows = oracle::random_gaussian(rng, n, dim);
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) {
    labels[i] = i < n / 3 ? "a" : "b";  // unbalanced on purpose
    if (labels[i] == "a") rows(i, 0) += 2.0;
  }
  const Subspace s = pls_subspace(rows, labels, 1);

  // closed form: w = normalize(Xc^T yc), yc the centered indicator of the
  // first class in sorted label order
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const Matrix xc = rows.rowwise() - mean;
  Vector y(n);
  for (int i = 0; i < n; ++i) y(i) = labels[i] == "a" ? 1.0 : 0.0;
  y.array() -= y.mean();
  Vector w = xc.transpose() * y;
  w.normalize();
  CHECK((s.basis.col(0) - w).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pls rejects a single class") {
  Rng rng(7);
  const Matrix rows = oracle::random_gaussian(rng, 50, 3);
  const std::vector<std::string> labels(50, "only");
  CHECK(oracle::thrown_code([&] { pls_subspace(rows, labels, 1); }) == Errc::single_class);
}

TEST_CASE("orthogonal complement completes the frame") {
  SUBCASE("e1 in the plane") {
    Matrix basis(2, 1);
    basis << 1.0, 0.0;
    const Matrix comp = orthogonal_complement(basis);
    REQUIRE(comp.rows() == 2);
    REQUIRE(comp.cols() == 1);
    CHECK(std::abs(std::abs(comp(1, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(comp(0, 0)) < 1e-12);
  }
  SUBCASE("random 5x2 frame") {
    Rng rng(8);
    const Matrix basis = oracle::random_orthonormal(rng, 5, 2);
    const Matrix comp = orthogonal_complement(basis);
    REQUIRE(comp.rows() == 5);
    REQUIRE(comp.cols() == 3);
    Matrix full(5, 5);
    full << basis, comp;
    CHECK((full.transpose() * full - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("full basis has no complement") {
    Rng rng(9);
    const Matrix basis = oracle::random_orthonormal(rng, 3, 3);
    CHECK(oracle::thrown_code([&] { orthogonal_complement(basis); }) ==
          Errc::dimension_mismatch);
  }
}

TEST_CASE("principal angles on canonical pairs") {
  auto make = [](std::initializer_list<double> xs) {
    Matrix m(2, 1);
    auto it = xs.begin();
    m(0, 0) = *it++;
    m(1, 0) = *it;
    return Subspace{m, SubspaceMethod::pca, ""};
  };
  const Subspace e1 = make({1.0, 0.0});
  const Subspace e2 = make({0.0, 1.0});
  const Subspace diag = make({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)});

  CHECK(principal_angles(e1, e1).angles(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(principal_angles(e1, e2).angles(0) == doctest::Approx(kPi / 2).epsilon(1e-12));
  CHECK(principal_angles(e1, diag).angles(0) == doctest::Approx(kPi / 4).epsilon(1e-12));
}

TEST_CASE("principal angles ignore in-span rotations") {
  Rng rng(10);
  const Matrix a = oracle::random_orthonormal(rng, 7, 3);
  const Matrix b = oracle::random_orthonormal(rng, 7, 3);

  // rotate b's columns inside its own span by a random orthogonal 3x3
  Matrix q = oracle::random_orthonormal(rng, 3, 3);
  const Subspace sa{a, SubspaceMethod::pca, ""};
  const Subspace sb{b, SubspaceMethod::pca, ""};
  const Subspace sb_rot{b * q, SubspaceMethod::pca, ""};

  const Vector before = principal_angles(sa, sb).angles;
  const Vector after = principal_angles(sa, sb_rot).angles;
  CHECK((before - after).cwiseAbs().maxCoeff() < 1e-8);
  for (Eigen::Index i = 0; i + 1 < before.size(); ++i) CHECK(before(i) <= before(i + 1));
  CHECK(before.minCoeff() >= 0.0);
  CHECK(before.maxCoeff() <= kPi / 2 + 1e-12);
}

TEST_CASE("subspace persists losslessly") {
  Rng rng(11);
  const Matrix rows = oracle::random_gaussian(rng, 60, 4);
  const Subspace s = pca_subspace(rows, 2, "camX");
  const auto path = std::filesystem::temp_directory_path() / "camadapt_test_subspace.json";
  save_subspace(s, path);
  const Subspace back = load_subspace(path);
  CHECK(back.basis == s.basis);
  CHECK(back.camera_id == "camX");
  CHECK(back.method == SubspaceMethod::pca);
}

TEST_CASE("subspace dimension requests are validated") {
  Rng rng(12);
  const Matrix rows = oracle::random_gaussian(rng, 50, 3);
  CHECK(oracle::thrown_code([&] { pca_subspace(rows, 3); }) == Errc::rank_deficient);
  CHECK(oracle::thrown_code([&] { pca_subspace(rows, 0); }) == Errc::rank_deficient);
}
