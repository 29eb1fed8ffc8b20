#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "camadapt/adapt.hpp"
#include "camadapt/dataio.hpp"
#include "camadapt/metric.hpp"
#include "camadapt/types.hpp"

namespace camadapt {

/// Cumulative match curve over gallery identities: rates[k-1] is the
/// fraction of probes whose correct identity ranks within the top k.
struct CmcCurve {
  Vector rates;        // length G, non-decreasing, ends at 1.0
  double nauc = 0.0;   // mean of rates, in [1/G, 1]
};

/// Rank of each probe's correct identity. Gallery identity scores take the
/// minimum over that identity's gallery images; ties count against the probe
/// (rank = 1 + wrong identities scoring <= the correct one).
std::vector<int> match_rank(const Matrix& scores, const std::vector<std::string>& probe_ids,
                            const std::vector<std::string>& gallery_ids);

CmcCurve cmc(const std::vector<int>& ranks, int gallery_identities);

enum class EvalMode { ours_unsup, direct_gfk, best_gfk, ours_semi, euclidean_baseline };

std::string eval_mode_name(EvalMode mode, double semi_fraction = 0.0);

struct EvalConfig {
  EvalMode mode = EvalMode::ours_unsup;
  MetricMethod metric_method = MetricMethod::kissme;
  int subspace_dim = 50;
  /// Reduce features to this dimension with a per-trial PCA fitted on source
  /// training data first; 0 (or >= the dataset dimension) disables it.
  int reduce_dim = 0;
  double semi_fraction = 0.5;  // labeled share of target train identities (ours_semi)
  std::vector<std::string> target_cameras;
  SplitSpec split;
};

/// CMC curves of one probe->gallery direction across all trials.
struct DirectionResult {
  std::string probe_camera;
  std::string gallery_camera;
  std::vector<CmcCurve> trial_curves;  // one per trial
  CmcCurve mean_curve;                 // elementwise mean over trials
};

struct BestSourcePick {
  int trial = 0;
  std::string target_camera;
  std::string best_source;
};

struct ExperimentReport {
  std::string mode_name;
  MetricMethod metric_method = MetricMethod::kissme;
  int subspace_dim = 0;
  int feature_dim = 0;   // dimension scoring ran at (after any reduction)
  int reduce_dim = 0;
  double semi_fraction = 0.0;
  SplitSpec split;
  std::vector<std::string> target_cameras;
  double gfk_scale_constant = 0.0;
  std::vector<BestSourcePick> best_sources;   // trial-major, then target order
  std::vector<DirectionResult> directions;    // sorted by (probe, gallery)
};

ExperimentReport run_experiment(const NetworkDataset& dataset, const EvalConfig& config);

/// One line of the mode comparison table: direction-averaged statistics for
/// an unordered camera pair under one mode.
struct ComparisonRow {
  std::string mode;
  std::string pair;  // "a|b", lexicographic
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  double nauc = 0.0;
  double stddev_rank1 = 0.0;  // sample stddev of per-trial rank-1 over trials
};

/// Reports must share the dataset shape and split spec; rows come out sorted
/// by (mode, pair).
std::vector<ComparisonRow> compare_modes(const std::vector<ExperimentReport>& reports);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);

/// Per-direction curve dump, one "rank,rate" line per gallery rank.
std::string curve_csv(const CmcCurve& curve);

void save_report(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport load_report(const std::filesystem::path& path);

}  // namespace camadapt
