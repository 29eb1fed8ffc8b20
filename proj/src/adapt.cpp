#include "camadapt/adapt.hpp"

#include <algorithm>
#include <cstddef>
#include <exception>

#include "camadapt/error.hpp"
#include "camadapt/jsonio.hpp"

namespace camadapt {

double camera_pair_distance(const Kernel& kernel, const Matrix& source_samples,
                            const Matrix& target_samples) {
  if (source_samples.rows() == 0 || target_samples.rows() == 0) {
    fail(Errc::empty_input, "camera_pair_distance: empty sample set");
  }
  return kernel_distance(kernel, source_samples, target_samples).mean();
}

namespace {

// Shared core: rank the sources against a fixed target subspace. Per-source
// work runs in parallel into its own slot; the fold below is sequential over
// the camera-id order established here.
DiscoveryResult rank_sources(const std::vector<SourceCamera>& sources,
                             const Subspace& target_subspace, const UnlabeledSet& target,
                             int subspace_dim) {
  if (sources.empty()) fail(Errc::no_sources, "need at least one installed camera");

  std::vector<std::size_t> order(sources.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sources[a].camera_id < sources[b].camera_id;
  });

  std::vector<Kernel> kernels(sources.size());
  std::vector<double> distances(sources.size());
  std::vector<std::exception_ptr> errors(sources.size());
  const auto n = static_cast<std::ptrdiff_t>(sources.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t rank = 0; rank < n; ++rank) {
    const auto slot = static_cast<std::size_t>(rank);
    try {
      const SourceCamera& src = sources[order[slot]];
      Subspace src_subspace = pls_subspace(src.samples.features, src.samples.person_ids,
                                           subspace_dim, src.camera_id);
      Kernel k = gfk_closed_form(flow_decompose(src_subspace, target_subspace));
      distances[slot] = camera_pair_distance(k, src.samples.features, target.features);
      kernels[slot] = std::move(k);
    } catch (...) {
      errors[slot] = std::current_exception();  // escaping an omp loop aborts
    }
  }
  for (const std::exception_ptr& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  DiscoveryResult result;
  result.ranking.target_camera = target_subspace.camera_id;
  for (std::size_t rank = 0; rank < sources.size(); ++rank) {
    const SourceCamera& src = sources[order[rank]];
    result.ranking.entries.push_back({src.camera_id, distances[rank]});
    result.kernels.emplace(src.camera_id, std::move(kernels[rank]));
  }
  std::sort(result.ranking.entries.begin(), result.ranking.entries.end(),
            [](const SourceRanking::Entry& a, const SourceRanking::Entry& b) {
              if (a.avg_distance != b.avg_distance) return a.avg_distance < b.avg_distance;
              return a.source_camera < b.source_camera;
            });
  result.ranking.best_source = result.ranking.entries.front().source_camera;
  return result;
}

}  // namespace

DiscoveryResult discover_best_source(const std::vector<SourceCamera>& sources,
                                     const UnlabeledSet& target, int subspace_dim,
                                     const std::string& target_camera_id) {
  Subspace target_subspace = pca_subspace(target.features, subspace_dim, target_camera_id);
  return rank_sources(sources, target_subspace, target, subspace_dim);
}

DiscoveryResult discover_best_source(const std::vector<SourceCamera>& sources,
                                     const Subspace& target_subspace,
                                     const UnlabeledSet& target, int subspace_dim) {
  return rank_sources(sources, target_subspace, target, subspace_dim);
}

MultiTargetResult common_best_source(const std::vector<SourceCamera>& sources,
                                     const std::vector<TargetCamera>& targets,
                                     int subspace_dim) {
  if (sources.empty()) fail(Errc::no_sources, "need at least one installed camera");
  if (targets.empty()) fail(Errc::no_targets, "need at least one target camera");

  MultiTargetResult result;
  result.per_target.reserve(targets.size());
  for (const TargetCamera& t : targets) {
    result.per_target.push_back(
        discover_best_source(sources, t.samples, subspace_dim, t.camera_id));
  }

  // Average each source's distance over all targets; lowest wins, camera id
  // breaks ties.
  std::map<std::string, double> totals;
  for (const DiscoveryResult& dr : result.per_target) {
    for (const SourceRanking::Entry& e : dr.ranking.entries) {
      totals[e.source_camera] += e.avg_distance;
    }
  }
  result.common_best = totals.begin()->first;
  double best = totals.begin()->second;
  for (const auto& [camera, total] : totals) {
    if (total < best) {
      best = total;
      result.common_best = camera;
    }
  }
  return result;
}

Kernel transitive_kernel(const Metric& metric, const Kernel& kernel) {
  if (metric.matrix.rows() != kernel.matrix.rows() ||
      metric.matrix.cols() != kernel.matrix.cols()) {
    fail(Errc::dimension_mismatch, "metric and kernel shapes differ");
  }
  Kernel out;
  out.kind = KernelKind::transitive;
  out.matrix = metric.matrix.cwiseProduct(kernel.matrix);
  // The connected source is whichever metric endpoint is not the kernel's own
  // source camera.
  out.source_camera = metric.source_camera == kernel.source_camera
                          ? metric.dest_camera
                          : metric.source_camera;
  out.target_camera = kernel.target_camera;
  return out;
}

std::map<CameraPair, PairScorer> assemble_network_kernels(
    const SourceRanking& ranking, const std::map<std::string, Kernel>& kernels,
    const std::map<CameraPair, Metric>& metrics) {
  const std::string& best = ranking.best_source;
  const std::string& target = ranking.target_camera;
  auto best_it = kernels.find(best);
  if (best_it == kernels.end()) {
    fail(Errc::missing_kernel, "no kernel for best source " + best);
  }

  std::map<CameraPair, PairScorer> scorers;
  PairScorer direct;
  direct.kernel = best_it->second;
  scorers.emplace(make_camera_pair(best, target), std::move(direct));

  for (const SourceRanking::Entry& entry : ranking.entries) {
    const std::string& src = entry.source_camera;
    if (src == best) continue;
    auto metric_it = metrics.find(make_camera_pair(src, best));
    if (metric_it == metrics.end()) {
      fail(Errc::missing_metric, "no metric for pair " + src + ", " + best);
    }
    PairScorer scorer;
    scorer.kernel = transitive_kernel(metric_it->second, best_it->second);
    scorer.kernel.source_camera = src;
    scorers.emplace(make_camera_pair(src, target), std::move(scorer));
  }

  for (const auto& [pair, metric] : metrics) {
    PairScorer scorer;
    scorer.is_metric = true;
    scorer.metric = metric;
    scorers.emplace(pair, std::move(scorer));
  }
  return scorers;
}

void save_ranking(const SourceRanking& r, const std::filesystem::path& path) {
  Json j;
  j["target"] = r.target_camera;
  j["best"] = r.best_source;
  j["entries"] = Json::array();
  for (const SourceRanking::Entry& e : r.entries) {
    Json entry;
    entry["source"] = e.source_camera;
    entry["distance"] = e.avg_distance;
    j["entries"].push_back(std::move(entry));
  }
  write_json_file(path, j);
}

SourceRanking load_ranking(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  SourceRanking r;
  r.target_camera = j.at("target").get<std::string>();
  r.best_source = j.at("best").get<std::string>();
  for (const Json& entry : j.at("entries")) {
    r.entries.push_back(
        {entry.at("source").get<std::string>(), entry.at("distance").get<double>()});
  }
  return r;
}

}  // namespace camadapt
