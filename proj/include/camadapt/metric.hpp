#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>

#include "camadapt/types.hpp"

namespace camadapt {

enum class MetricMethod { kissme, ldml };

/// Learned pairwise distance matrix M for a camera pair. Scoring is the
/// quadratic form (x - y)^T M (x - y); KISSME output is PSD by construction,
/// LDML additionally carries the logistic bias threshold.
struct Metric {
  Matrix matrix;  // D x D symmetric
  std::string source_camera;
  std::string dest_camera;
  MetricMethod method = MetricMethod::kissme;
  double bias = 0.0;  // LDML only
};

/// Difference vectors of same-identity and cross-identity sample pairs across
/// one camera pair; rows are x_i^A - x_j^B.
struct PairSet {
  Matrix similar_diffs;
  Matrix dissimilar_diffs;
};

struct PairOptions {
  /// Keep at most ratio_cap * |similar| dissimilar diffs (seeded subsample).
  int ratio_cap = 10;
  std::uint64_t seed = 0;
};

PairSet build_pairs(const LabeledSet& samples_a, const LabeledSet& samples_b,
                    const std::set<std::string>& train_ids, const PairOptions& opts = {});

/// KISSME (likelihood-ratio) metric: psd_clip(S_sim^-1 - S_dis^-1), where the
/// S are raw second-moment matrices of the diff vectors and each gets
/// ridge * trace(S)/D added before inversion.
Metric kissme_fit(const PairSet& pairs, double ridge = 1e-6);

/// Symmetrize, eigendecompose, zero out negative eigenvalues, reconstruct.
Matrix psd_clip(const Matrix& m);

struct LdmlConfig {
  double learning_rate = 1.0;
  int max_iters = 300;
  double tolerance = 1e-5;
};

/// Logistic metric: p(same) = sigmoid(bias - x_ij^T M x_ij), fitted by
/// gradient ascent with halving backtracking; the likelihood trace over
/// accepted steps is non-decreasing.
Metric ldml_fit(const PairSet& pairs, const LdmlConfig& config = {});

double mahalanobis(const Metric& metric, const Vector& x, const Vector& y);

/// Pair log-likelihood of (matrix, bias) on a PairSet under the LDML model.
double ldml_log_likelihood(const Matrix& m, double bias, const PairSet& pairs);

void save_metric(const Metric& m, const std::filesystem::path& path);
Metric load_metric(const std::filesystem::path& path);

}  // namespace camadapt
