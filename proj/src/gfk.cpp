#include "camadapt/gfk.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"

namespace camadapt {
namespace {

// Columns with sin(theta) at or below this are treated as zero-angle
// directions and filled in by orthonormal completion instead of division.
constexpr double kDegenerateSine = 1e-8;

// Below this angle the closed-form weights switch to their t -> 0 limits
// (2, 0, 0) to dodge the 0/0 in sin(2t)/2t.
constexpr double kAngleLimit = 1e-10;

std::string kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::gfk_closed: return "gfk_closed";
    case KernelKind::gfk_quadrature: return "gfk_quadrature";
    case KernelKind::transitive: return "transitive";
  }
  fail(Errc::invalid_config, "unknown kernel kind");
}

KernelKind kind_from_name(const std::string& name) {
  if (name == "gfk_closed") return KernelKind::gfk_closed;
  if (name == "gfk_quadrature") return KernelKind::gfk_quadrature;
  if (name == "transitive") return KernelKind::transitive;
  fail(Errc::invalid_config, "unknown kernel kind: " + name);
}

}  // namespace

FlowDecomposition flow_decompose(const Subspace& source, const Subspace& target) {
  const Eigen::Index ambient = source.basis.rows();
  const Eigen::Index dim = source.basis.cols();
  if (target.basis.rows() != ambient || target.basis.cols() != dim) {
    fail(Errc::dimension_mismatch, "source and target subspaces have different shapes");
  }
  if (dim > ambient - dim) {
    fail(Errc::subspace_too_large,
         "subspace dimension exceeds half the ambient dimension");
  }

  FlowDecomposition flow;
  flow.source = source.basis;
  flow.complement = orthogonal_complement(source.basis);
  flow.source_camera = source.camera_id;
  flow.target_camera = target.camera_id;

  Eigen::JacobiSVD<Matrix> svd(source.basis.transpose() * target.basis,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  flow.u1 = svd.matrixU();
  flow.angles.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    flow.angles[j] = std::acos(std::clamp(svd.singularValues()[j], 0.0, 1.0));
  }

  // The second factor pair is pinned by the first: with B = So^T T and P from
  // the SVD above, (BP)^T (BP) = I - diag(cos theta)^2, so the columns of
  // -BP / sin(theta) are already orthonormal wherever theta > 0.
  Matrix rotated = (flow.complement.transpose() * target.basis) * svd.matrixV();
  flow.u2.resize(ambient - dim, dim);
  std::vector<Eigen::Index> degenerate;
  std::vector<Eigen::Index> regular;
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double norm = rotated.col(j).norm();
    if (std::sin(flow.angles[j]) <= kDegenerateSine || norm <= 1e-12) {
      // acos turns ulp-level Gram noise into angles of order sqrt(eps); once a
      // direction is below that resolution its u2 column is an arbitrary
      // completion, so the angle must be exactly zero to keep it inert.
      flow.angles[j] = 0.0;
      degenerate.push_back(j);
    } else {
      flow.u2.col(j) = -rotated.col(j) / norm;
      regular.push_back(j);
    }
  }
  if (!degenerate.empty()) {
    // Zero-angle directions leave u2 unconstrained; complete to an
    // orthonormal set so downstream products stay well-defined.
    if (regular.empty()) {
      flow.u2 = Matrix::Identity(ambient - dim, dim);
    } else {
      Matrix fixed(ambient - dim, static_cast<Eigen::Index>(regular.size()));
      for (std::size_t c = 0; c < regular.size(); ++c) {
        fixed.col(static_cast<Eigen::Index>(c)) = flow.u2.col(regular[c]);
      }
      Matrix completion = orthogonal_complement(fixed);
      for (std::size_t c = 0; c < degenerate.size(); ++c) {
        flow.u2.col(degenerate[c]) = completion.col(static_cast<Eigen::Index>(c));
      }
    }
  }
  return flow;
}

Matrix geodesic_flow(const FlowDecomposition& flow, double y) {
  if (!(y >= 0.0 && y <= 1.0)) {
    fail(Errc::out_of_range, "flow position must lie in [0, 1]");
  }
  if (y == 0.0) return flow.source;
  Vector cosines = (y * flow.angles).array().cos();
  Vector sines = (y * flow.angles).array().sin();
  return flow.source * (flow.u1 * cosines.asDiagonal()) -
         flow.complement * (flow.u2 * sines.asDiagonal());
}

Kernel gfk_closed_form(const FlowDecomposition& flow) {
  const Eigen::Index dim = flow.angles.size();
  Vector lambda1(dim);
  Vector lambda2(dim);
  Vector lambda3(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double t = flow.angles[j];
    if (t < kAngleLimit) {
      lambda1[j] = 2.0;
      lambda2[j] = 0.0;
      lambda3[j] = 0.0;
    } else {
      lambda1[j] = 1.0 + std::sin(2.0 * t) / (2.0 * t);
      lambda2[j] = (std::cos(2.0 * t) - 1.0) / (2.0 * t);
      lambda3[j] = 1.0 - std::sin(2.0 * t) / (2.0 * t);
    }
  }

  Matrix left = flow.source * flow.u1;       // D x d
  Matrix right = flow.complement * flow.u2;  // D x d
  Matrix cross = left * lambda2.asDiagonal() * right.transpose();
  Matrix k = left * lambda1.asDiagonal() * left.transpose() + cross + cross.transpose() +
             right * lambda3.asDiagonal() * right.transpose();

  Kernel kernel;
  kernel.kind = KernelKind::gfk_closed;
  kernel.source_camera = flow.source_camera;
  kernel.target_camera = flow.target_camera;
  kernel.matrix = 0.5 * (k + k.transpose());
  return kernel;
}

namespace {

// Trapezoid rule over fixed-size node chunks. Each chunk accumulates
// sequentially and chunks are reduced in index order, so the result is
// bit-identical whether or not the chunk loop runs in parallel.
Kernel quadrature_impl(const FlowDecomposition& flow, int panels, bool parallel) {
  if (panels < 1) fail(Errc::invalid_config, "quadrature needs at least one panel");
  const Eigen::Index ambient = flow.source.rows();
  constexpr int kChunk = 64;
  const int nodes = panels + 1;
  const int n_chunks = (nodes + kChunk - 1) / kChunk;
  std::vector<Matrix> partial(static_cast<std::size_t>(n_chunks));

#pragma omp parallel for schedule(static) if (parallel)
  for (int c = 0; c < n_chunks; ++c) {
    Matrix acc = Matrix::Zero(ambient, ambient);
    const int hi = std::min(nodes, (c + 1) * kChunk);
    for (int k = c * kChunk; k < hi; ++k) {
      const double y = static_cast<double>(k) / panels;
      const double weight = (k == 0 || k == panels) ? 0.5 : 1.0;
      Matrix phi = geodesic_flow(flow, y);
      acc.selfadjointView<Eigen::Lower>().rankUpdate(phi, weight);
    }
    partial[static_cast<std::size_t>(c)] = std::move(acc);
  }

  Matrix sum = Matrix::Zero(ambient, ambient);
  for (const Matrix& part : partial) sum += part;
  sum /= static_cast<double>(panels);
  sum.triangularView<Eigen::StrictlyUpper>() = sum.transpose();

  Kernel kernel;
  kernel.kind = KernelKind::gfk_quadrature;
  kernel.source_camera = flow.source_camera;
  kernel.target_camera = flow.target_camera;
  kernel.matrix = std::move(sum);
  return kernel;
}

// One probe row against every gallery row, written into its own output row;
// `projected` holds K * gallery^T.
void distance_row(const Matrix& kernel, const Matrix& probes, const Matrix& projected,
                  const Vector& gallery_quad, Eigen::Index i, Matrix& out) {
  const double probe_quad = probes.row(i) * kernel * probes.row(i).transpose();
  out.row(i) = (probe_quad + gallery_quad.array().transpose()).matrix() -
               2.0 * (probes.row(i) * projected);
}

Matrix distance_impl(const Kernel& kernel, const Matrix& probes, const Matrix& gallery,
                     bool parallel) {
  if (kernel.matrix.rows() != kernel.matrix.cols()) {
    fail(Errc::dimension_mismatch, "kernel matrix is not square");
  }
  if (probes.cols() != kernel.matrix.rows() || gallery.cols() != kernel.matrix.rows()) {
    fail(Errc::dimension_mismatch, "sample dimension does not match kernel");
  }

  Matrix projected = kernel.matrix * gallery.transpose();  // D x n_gallery
  Vector gallery_quad(gallery.rows());
  for (Eigen::Index j = 0; j < gallery.rows(); ++j) {
    gallery_quad[j] = gallery.row(j) * projected.col(j);
  }

  Matrix out(probes.rows(), gallery.rows());
  const Eigen::Index n = probes.rows();
#pragma omp parallel for schedule(static) if (parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    distance_row(kernel.matrix, probes, projected, gallery_quad, i, out);
  }
  return out;
}

}  // namespace

Kernel gfk_quadrature_oracle(const FlowDecomposition& flow, int panels) {
  return quadrature_impl(flow, panels, true);
}

Kernel gfk_quadrature_oracle_serial(const FlowDecomposition& flow, int panels) {
  return quadrature_impl(flow, panels, false);
}

Matrix kernel_distance(const Kernel& kernel, const Matrix& probes, const Matrix& gallery) {
  return distance_impl(kernel, probes, gallery, true);
}

Matrix kernel_distance_serial(const Kernel& kernel, const Matrix& probes,
                              const Matrix& gallery) {
  return distance_impl(kernel, probes, gallery, false);
}

void save_kernel(const Kernel& k, const std::filesystem::path& path) {
  Json j;
  j["kind"] = kind_name(k.kind);
  j["source"] = k.source_camera;
  j["target"] = k.target_camera;
  j["matrix"] = matrix_to_json(k.matrix);
  write_json_file(path, j);
}

Kernel load_kernel(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  Kernel k;
  k.kind = kind_from_name(j.at("kind").get<std::string>());
  k.source_camera = j.at("source").get<std::string>();
  k.target_camera = j.at("target").get<std::string>();
  k.matrix = matrix_from_json(j.at("matrix"));
  return k;
}

}  // namespace camadapt
