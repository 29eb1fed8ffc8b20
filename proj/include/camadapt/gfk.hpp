#pragma once

#include <filesystem>
#include <string>

#include "camadapt/subspace.hpp"
#include "camadapt/types.hpp"

namespace camadapt {

enum class KernelKind { gfk_closed, gfk_quadrature, transitive };

/// Geodesic-flow kernel between two camera subspaces; all sample pairs are
/// scored through the quadratic form of `matrix`.
struct Kernel {
  Matrix matrix;  // D x D symmetric PSD
  KernelKind kind = KernelKind::gfk_closed;
  std::string source_camera;
  std::string target_camera;
};

/// Joint decomposition of a source/target subspace pair: the paired SVDs
///   S^T T = U1 * diag(cos theta) * P^T
///   So^T T = -U2 * diag(sin theta) * P^T
/// with So the orthogonal complement of S and theta the principal angles in
/// ascending order.
struct FlowDecomposition {
  Matrix source;       // D x d
  Matrix complement;   // D x (D - d)
  Matrix u1;           // d x d orthogonal
  Matrix u2;           // (D - d) x d, orthonormal columns
  Vector angles;       // d principal angles, ascending
  std::string source_camera;
  std::string target_camera;
};

/// Requires d <= D - d so the complement can absorb the rotated directions.
FlowDecomposition flow_decompose(const Subspace& source, const Subspace& target);

/// Basis of the flow at position y in [0, 1]:
///   phi(0) = source basis (exactly);
///   phi(y) = S U1 diag(cos(y theta)) - So U2 diag(sin(y theta)) otherwise.
Matrix geodesic_flow(const FlowDecomposition& flow, double y);

/// Closed-form kernel assembled from the decomposition. Integrates the flow
/// projector with principal-angle block weights
///   1 + sin(2t)/2t,  (cos(2t) - 1)/2t,  1 - sin(2t)/2t
/// and equals kGfkScaleConstant times the plain integral of phi(y) phi(y)^T.
Kernel gfk_closed_form(const FlowDecomposition& flow);

/// Ratio between the closed-form kernel and the trapezoid limit of
/// integral_0^1 phi(y) phi(y)^T dy.
inline constexpr double kGfkScaleConstant = 2.0;

/// Composite-trapezoid estimate of integral_0^1 phi(y) phi(y)^T dy with
/// `panels` equal intervals (panels + 1 flow evaluations). Independent check
/// on the closed form; does not share its algebra.
Kernel gfk_quadrature_oracle(const FlowDecomposition& flow, int panels);
Kernel gfk_quadrature_oracle_serial(const FlowDecomposition& flow, int panels);

/// Pairwise squared kernel distances between probe rows and gallery rows:
///   d(i, j) = x_i^T K x_i + x_j^T K x_j - 2 x_i^T K x_j.
/// The parallel and serial versions produce bit-identical results.
Matrix kernel_distance(const Kernel& kernel, const Matrix& probes, const Matrix& gallery);
Matrix kernel_distance_serial(const Kernel& kernel, const Matrix& probes,
                              const Matrix& gallery);

void save_kernel(const Kernel& k, const std::filesystem::path& path);
Kernel load_kernel(const std::filesystem::path& path);

}  // namespace camadapt
