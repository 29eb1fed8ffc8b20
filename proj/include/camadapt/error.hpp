#pragma once

#include <stdexcept>
#include <string>

namespace camadapt {

enum class Errc {
  missing_file,
  io_error,
  dimension_mismatch,
  duplicate_sample_key,
  non_finite_feature,
  rank_deficient,
  not_enough_identities,
  invalid_config,
  no_similar_pairs,
  singular_covariance,
  diverged,
  single_class,
  subspace_too_large,
  out_of_range,
  probe_identity_missing,
  missing_metric,
  missing_kernel,
  no_sources,
  no_targets,
  empty_input,
  incompatible_reports,
};

/// Library-wide exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace camadapt
