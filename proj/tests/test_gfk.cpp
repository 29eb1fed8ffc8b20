#include <doctest.h>

#include <camadapt/error.hpp>
#include <camadapt/gfk.hpp>
#include <camadapt/subspace.hpp>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"

using namespace camadapt;

namespace {

constexpr double kPi = 3.14159265358979323846;

Subspace wrap(const Matrix& basis, const std::string& id = "") {
  return Subspace{basis, SubspaceMethod::pca, id};
}

Subspace axis(int dim, int which) {
  Matrix m = Matrix::Zero(dim, 1);
  m(which, 0) = 1.0;
  return wrap(m);
}

// fitted least-squares constant between two kernels
double fit_constant(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b).sum() / b.cwiseProduct(b).sum();
}

}  // namespace

TEST_CASE("decomposition of identical subspaces") {
  Rng rng(1);
  const Matrix basis = oracle::random_orthonormal(rng, 6, 2);
  const FlowDecomposition flow = flow_decompose(wrap(basis, "s"), wrap(basis, "t"));
  CHECK(flow.angles.cwiseAbs().maxCoeff() < 1e-7);
  CHECK(flow.source_camera == "s");
  CHECK(flow.target_camera == "t");
  // U1 diag(cos t) from S^T T = U1 cos(t) P^T with all cosines 1: the product
  // S^T T itself must be orthogonal
  const Matrix prod = basis.transpose() * basis;
  CHECK((prod * prod.transpose() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("one-dimensional quarter-turn decomposition") {
  Matrix t(2, 1);
  t << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const FlowDecomposition flow = flow_decompose(axis(2, 0), wrap(t));
  CHECK(flow.angles(0) == doctest::Approx(kPi / 4).epsilon(1e-12));
  // complement of e1 is e2 up to canonical sign; the paired SVD forces
  // So^T T = -U2 sin(theta), so U2 = -(e2^T t) / sin(pi/4) = -1
  CHECK(flow.u2(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(flow.u1(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("paired svd identities hold for random subspaces") {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const Subspace s = wrap(oracle::random_orthonormal(rng, 8, 3));
    const Subspace t = wrap(oracle::random_orthonormal(rng, 8, 3));
    const FlowDecomposition flow = flow_decompose(s, t);

    const Matrix st = flow.source.transpose() * t.basis;       // = U1 G P^T
    const Matrix ot = flow.complement.transpose() * t.basis;   // = -U2 S P^T
    const Vector cosines = flow.angles.array().cos();
    const Vector sines = flow.angles.array().sin();

    // P^T cancels in the three Gram products, so the identities are testable
    // without exposing P
    const Matrix gram_ss = flow.u1 * cosines.asDiagonal() * cosines.asDiagonal() *
                           flow.u1.transpose();
    CHECK((st * st.transpose() - gram_ss).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix gram_oo =
        flow.u2 * sines.asDiagonal() * sines.asDiagonal() * flow.u2.transpose();
    CHECK((ot * ot.transpose() - gram_oo).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix gram_so = -(flow.u1 * cosines.asDiagonal() * sines.asDiagonal() *
                             flow.u2.transpose());
    CHECK((st * ot.transpose() - gram_so).cwiseAbs().maxCoeff() < 1e-8);

    CHECK((flow.u1.transpose() * flow.u1 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((flow.u2.transpose() * flow.u2 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <
          1e-10);
    for (Eigen::Index i = 0; i + 1 < flow.angles.size(); ++i)
      CHECK(flow.angles(i) <= flow.angles(i + 1));
  }
}

TEST_CASE("subspaces thicker than half the space are rejected") {
  Rng rng(3);
  const Subspace s = wrap(oracle::random_orthonormal(rng, 5, 3));
  const Subspace t = wrap(oracle::random_orthonormal(rng, 5, 3));
  CHECK(oracle::thrown_code([&] { flow_decompose(s, t); }) == Errc::subspace_too_large);
}

TEST_CASE("flow boundary conditions and interior orthonormality") {
  Rng rng(4);
  const Subspace s = wrap(oracle::random_orthonormal(rng, 9, 3));
  const Subspace t = wrap(oracle::random_orthonormal(rng, 9, 3));
  const FlowDecomposition flow = flow_decompose(s, t);

  CHECK(geodesic_flow(flow, 0.0) == s.basis);  // bitwise

  const Matrix at_one = geodesic_flow(flow, 1.0);
  const Vector end_angles = principal_angles(wrap(at_one), t).angles;
  CHECK(end_angles.cwiseAbs().maxCoeff() <= 1e-6);

  for (double y : {0.25, 0.5, 0.75}) {
    const Matrix phi = geodesic_flow(flow, y);
    CHECK((phi.transpose() * phi - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  }

  CHECK(oracle::thrown_code([&] { geodesic_flow(flow, -0.01); }) == Errc::out_of_range);
  CHECK(oracle::thrown_code([&] { geodesic_flow(flow, 1.01); }) == Errc::out_of_range);
}

TEST_CASE("identical subspaces give a scaled projector") {
  Rng rng(5);
  const Matrix basis = oracle::random_orthonormal(rng, 7, 2);
  const Kernel k = gfk_closed_form(flow_decompose(wrap(basis), wrap(basis)));
  const Matrix projector = basis * basis.transpose();
  CHECK((k.matrix - kGfkScaleConstant * projector).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("closed form matches the quadrature oracle") {
  SUBCASE("quarter turn in the plane") {
    Matrix t(2, 1);
    t << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const FlowDecomposition flow = flow_decompose(axis(2, 0), wrap(t));
    const Kernel closed = gfk_closed_form(flow);
    const Kernel quad = gfk_quadrature_oracle(flow, 10000);
    const double c = fit_constant(closed.matrix, quad.matrix);
    CHECK((closed.matrix - c * quad.matrix).norm() / (c * quad.matrix).norm() <= 1e-6);
    CHECK(c == doctest::Approx(kGfkScaleConstant).epsilon(1e-6));
  }
  SUBCASE("random eight-dimensional pair") {
    Rng rng(6);
    const Subspace s = wrap(oracle::random_orthonormal(rng, 8, 3));
    const Subspace t = wrap(oracle::random_orthonormal(rng, 8, 3));
    const FlowDecomposition flow = flow_decompose(s, t);
    const Kernel closed = gfk_closed_form(flow);
    const Kernel quad = gfk_quadrature_oracle(flow, 10000);
    const double c = fit_constant(closed.matrix, quad.matrix);
    CHECK((closed.matrix - c * quad.matrix).norm() / (c * quad.matrix).norm() <= 1e-6);
  }
}

TEST_CASE("quadrature oracle on analytic cases") {
  SUBCASE("identical subspaces integrate a constant") {
    // the integrand is the constant basis * basis^T, so even a coarse grid
    // must land on the projector to rounding error
    Rng rng(7);
    const Matrix basis = oracle::random_orthonormal(rng, 6, 2);
    const Kernel quad = gfk_quadrature_oracle(flow_decompose(wrap(basis), wrap(basis)), 64);
    CHECK((quad.matrix - basis * basis.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("orthogonal lines in the plane") {
    // integrals of cos^2, sin^2 and sin*cos over one quarter period
    const FlowDecomposition flow = flow_decompose(axis(2, 0), axis(2, 1));
    CHECK(flow.angles(0) == doctest::Approx(kPi / 2).epsilon(1e-12));
    const Kernel quad = gfk_quadrature_oracle(flow, 20000);
    CHECK(quad.matrix(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(quad.matrix(1, 1) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(quad.matrix(0, 1)) == doctest::Approx(1.0 / kPi).epsilon(1e-8));
  }
  SUBCASE("panel doubling has converged") {
    Rng rng(8);
    const Subspace s = wrap(oracle::random_orthonormal(rng, 8, 2));
    const Subspace t = wrap(oracle::random_orthonormal(rng, 8, 2));
    const FlowDecomposition flow = flow_decompose(s, t);
    const Kernel a = gfk_quadrature_oracle(flow, 20000);
    const Kernel b = gfk_quadrature_oracle(flow, 40000);
    CHECK((a.matrix - b.matrix).norm() <= 1e-8);
  }
}

TEST_CASE("kernel degenerates continuously to the projector") {
  const double tiny = 1e-6;
  Matrix t(2, 1);
  t << std::cos(tiny), std::sin(tiny);
  const Kernel k = gfk_closed_form(flow_decompose(axis(2, 0), wrap(t)));
  Matrix proj(2, 2);
  proj << 1, 0, 0, 0;
  CHECK((k.matrix - kGfkScaleConstant * proj).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("closed-form kernels are symmetric positive semidefinite") {
  Rng rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const Subspace s = wrap(oracle::random_orthonormal(rng, 10, 4));
    const Subspace t = wrap(oracle::random_orthonormal(rng, 10, 4));
    const Kernel k = gfk_closed_form(flow_decompose(s, t));
    CHECK((k.matrix - k.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(oracle::jacobi_eigh(k.matrix).values.minCoeff() >= -1e-8);
  }
}

TEST_CASE("parallel and serial paths are bit identical") {
  Rng rng(10);
  const Subspace s = wrap(oracle::random_orthonormal(rng, 12, 4));
  const Subspace t = wrap(oracle::random_orthonormal(rng, 12, 4));
  const FlowDecomposition flow = flow_decompose(s, t);
  const Kernel par = gfk_quadrature_oracle(flow, 5000);
  const Kernel ser = gfk_quadrature_oracle_serial(flow, 5000);
  CHECK(par.matrix == ser.matrix);

  const Kernel k = gfk_closed_form(flow);
  const Matrix probes = oracle::random_gaussian(rng, 33, 12);
  const Matrix gallery = oracle::random_gaussian(rng, 21, 12);
  CHECK(kernel_distance(k, probes, gallery) == kernel_distance_serial(k, probes, gallery));
}

TEST_CASE("kernel distance reduces to squared euclidean for the identity") {
  Rng rng(11);
  Kernel eye;
  eye.matrix = Matrix::Identity(3, 3);
  const Matrix probes = oracle::random_gaussian(rng, 4, 3);
  const Matrix gallery = oracle::random_gaussian(rng, 6, 3);
  const Matrix d = kernel_distance(eye, probes, gallery);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 6; ++j)
      CHECK(d(i, j) ==
            doctest::Approx((probes.row(i) - gallery.row(j)).squaredNorm()).epsilon(1e-12));

  // identical points score zero under any kernel
  Kernel k;
  const Matrix g = oracle::random_gaussian(rng, 3, 3);
  k.matrix = g * g.transpose();
  const Matrix same = kernel_distance(k, probes, probes);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(std::abs(same(i, i)) < 1e-10);
}

TEST_CASE("scaling the kernel scales distances and keeps order") {
  Rng rng(12);
  Kernel k;
  const Matrix g = oracle::random_gaussian(rng, 5, 5);
  k.matrix = g * g.transpose();
  Kernel doubled = k;
  doubled.matrix *= 2.0;
  const Matrix probes = oracle::random_gaussian(rng, 7, 5);
  const Matrix gallery = oracle::random_gaussian(rng, 9, 5);
  const Matrix d1 = kernel_distance(k, probes, gallery);
  const Matrix d2 = kernel_distance(doubled, probes, gallery);
  CHECK((d2 - 2.0 * d1).cwiseAbs().maxCoeff() < 1e-9);
  for (Eigen::Index i = 0; i < 7; ++i) {
    Eigen::Index a1, a2;
    d1.row(i).minCoeff(&a1);
    d2.row(i).minCoeff(&a2);
    CHECK(a1 == a2);
  }
}

TEST_CASE("kernel persists losslessly") {
  Rng rng(13);
  const Subspace s = wrap(oracle::random_orthonormal(rng, 6, 2), "camS");
  const Subspace t = wrap(oracle::random_orthonormal(rng, 6, 2), "camT");
  const Kernel k = gfk_closed_form(flow_decompose(s, t));
  const auto path = std::filesystem::temp_directory_path() / "camadapt_test_kernel.json";
  save_kernel(k, path);
  const Kernel back = load_kernel(path);
  CHECK(back.matrix == k.matrix);
  CHECK(back.kind == KernelKind::gfk_closed);
  CHECK(back.source_camera == "camS");
  CHECK(back.target_camera == "camT");
}
