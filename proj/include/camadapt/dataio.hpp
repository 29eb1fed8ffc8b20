#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "camadapt/types.hpp"

namespace camadapt {

/// Deterministic half/half identity split recipe. Identical seed + dataset
/// gives byte-identical splits on every platform (seeded splitmix64 shuffle,
/// never a standard-library engine).
struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.5;
  int images_per_identity = 5;
  int trials = 10;
};

struct Split {
  int trial_index = 0;
  std::set<std::string> train_ids;
  std::set<std::string> test_ids;
  /// (person_id, camera_id) -> chosen image ids, at most images_per_identity
  /// each (all available when an identity has fewer).
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> selected_images;
};

/// Affine projection fitted by PCA: x -> projection^T (x - mean).
struct LinearReducer {
  Vector mean;        // D_raw
  Matrix projection;  // D_raw x out_dim, orthonormal columns

  Vector apply(const Vector& x) const { return projection.transpose() * (x - mean); }
  Matrix apply_rows(const Matrix& rows) const {
    return (rows.rowwise() - mean.transpose()) * projection;
  }
};

/// Load a dataset from a JSON manifest referencing per-camera CSV files.
/// Manifest: { "dimension": D, "cameras": [ { "id": ..., "file": ... } ] }.
/// CSV: header person_id,image_id,f0,...,f{D-1}; LF or CRLF accepted.
NetworkDataset load_dataset(const std::filesystem::path& manifest_path);

/// Write manifest + per-camera CSVs under dir (LF endings, shortest
/// round-trip decimals, so load_dataset(write_dataset(ds)) is bit-exact).
void write_dataset(const NetworkDataset& ds, const std::filesystem::path& dir,
                   const std::string& manifest_name = "manifest.json");

/// PCA on the pooled samples of the given cameras. Columns of the projection
/// are orthonormal, ordered by decreasing variance, sign-canonicalized
/// (largest-magnitude component positive).
LinearReducer fit_pca_reducer(const NetworkDataset& ds, const std::set<std::string>& camera_subset,
                              int out_dim);

std::vector<Split> make_splits(const NetworkDataset& ds, const SplitSpec& spec);

void save_reducer(const LinearReducer& r, const std::filesystem::path& path);
LinearReducer load_reducer(const std::filesystem::path& path);

/// All samples of one camera (optionally restricted to an identity set),
/// honoring a split's image selection when provided.
LabeledSet camera_samples(const NetworkDataset& ds, const std::string& camera_id);
LabeledSet camera_samples(const NetworkDataset& ds, const std::string& camera_id,
                          const std::set<std::string>& identity_filter, const Split& split);

/// Distinct person ids in dataset order-independent (sorted) form.
std::vector<std::string> sorted_identities(const NetworkDataset& ds);

}  // namespace camadapt
