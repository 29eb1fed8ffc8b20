#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "camadapt/gfk.hpp"
#include "camadapt/metric.hpp"
#include "camadapt/subspace.hpp"
#include "camadapt/types.hpp"

namespace camadapt {

/// Installed camera: identity labels available for metric + PLS training.
struct SourceCamera {
  std::string camera_id;
  LabeledSet samples;
};

/// Source cameras ordered by average kernel distance to one target camera,
/// closest first; distance ties break on camera id.
struct SourceRanking {
  struct Entry {
    std::string source_camera;
    double avg_distance = 0.0;
  };
  std::string target_camera;
  std::string best_source;
  std::vector<Entry> entries;
};

/// Ranking plus every per-source flow kernel computed on the way, keyed by
/// source camera id; callers reuse these instead of recomputing.
struct DiscoveryResult {
  SourceRanking ranking;
  std::map<std::string, Kernel> kernels;
};

/// Mean of all pairwise kernel distances between the two sample sets.
double camera_pair_distance(const Kernel& kernel, const Matrix& source_samples,
                            const Matrix& target_samples);

/// Rank installed cameras by kernel distance to an unlabeled target: each
/// source gets a PLS subspace from its labels, the target a PCA subspace, a
/// flow kernel connects them, and sources sort by average distance. Target
/// labels are never read — the signature only admits the label-free view.
DiscoveryResult discover_best_source(const std::vector<SourceCamera>& sources,
                                     const UnlabeledSet& target, int subspace_dim,
                                     const std::string& target_camera_id);

/// Same ranking with a caller-supplied target subspace (used when a labeled
/// fraction of the target is available and a supervised subspace is wanted).
DiscoveryResult discover_best_source(const std::vector<SourceCamera>& sources,
                                     const Subspace& target_subspace,
                                     const UnlabeledSet& target, int subspace_dim);

/// One unlabeled target camera awaiting insertion.
struct TargetCamera {
  std::string camera_id;
  UnlabeledSet samples;
};

/// Discovery for several new cameras at once: per-target rankings plus the
/// single source whose average distance across all targets is lowest.
struct MultiTargetResult {
  std::string common_best;
  std::vector<DiscoveryResult> per_target;  // in input target order
};

MultiTargetResult common_best_source(const std::vector<SourceCamera>& sources,
                                     const std::vector<TargetCamera>& targets,
                                     int subspace_dim);

/// Elementwise (Schur) product of a learned metric with a flow kernel: the
/// score matrix for a source/target pair linked through the best source.
/// The product is symmetric but may be indefinite; it is used for ranking
/// as-is, without projection.
Kernel transitive_kernel(const Metric& metric, const Kernel& kernel);

/// Lexicographically ordered camera id pair, the key for pairwise artifacts.
using CameraPair = std::pair<std::string, std::string>;

inline CameraPair make_camera_pair(const std::string& a, const std::string& b) {
  return a < b ? CameraPair{a, b} : CameraPair{b, a};
}

/// Scoring object for one camera pair: a kernel (flow or transitive) for
/// pairs touching the target, a learned metric for installed pairs.
struct PairScorer {
  bool is_metric = false;
  Kernel kernel;
  Metric metric;
};

/// Scoring objects for every pair in the grown network: (best, target) keeps
/// its flow kernel, other (source, target) pairs get transitive kernels
/// through the best source, and installed pairs keep their metrics.
std::map<CameraPair, PairScorer> assemble_network_kernels(
    const SourceRanking& ranking, const std::map<std::string, Kernel>& kernels,
    const std::map<CameraPair, Metric>& metrics);

void save_ranking(const SourceRanking& r, const std::filesystem::path& path);
SourceRanking load_ranking(const std::filesystem::path& path);

}  // namespace camadapt
